import datetime

from django.conf import settings
from rest_framework import permissions
from rest_framework.exceptions import PermissionDenied


class HasRunAllowance(permissions.BasePermission):
    """
    Authenticated users may start any number of scenario runs.
    Anonymous users get HEAVYTAIL_ANON_RUN_LIMIT runs per day, counted in their session.
    """
    message = 'Daily run limit reached. Please sign in to start more scenario runs.'
    code = 'run_limit_exceeded'

    def has_permission(self, request, view):
        if request.user and request.user.is_authenticated:
            return True

        # Only creating a run counts against the allowance
        if request.method != 'POST':
            return True

        session = request.session
        today_str = datetime.date.today().isoformat()
        run_counts = session.get('run_counts', {})
        current_day_count = run_counts.get(today_str, 0)

        if current_day_count >= settings.HEAVYTAIL_ANON_RUN_LIMIT:
            raise PermissionDenied(detail={'detail': self.message, 'code': self.code})

        # older days are dropped so the session does not grow
        session['run_counts'] = {today_str: current_day_count + 1}
        session.modified = True
        return True
