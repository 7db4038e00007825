# heavytail_project/urls.py

from django.contrib import admin
from django.urls import path, include

urlpatterns = [
    path('admin/', admin.site.urls),

    # App-specific
    path('api/experiments/', include('experiments.urls')),
]
