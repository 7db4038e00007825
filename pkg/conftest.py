"""Run the Django test suite under plain pytest (mirrors `manage.py test` setup)."""
import os
import sys

import django
import pytest

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "heavytail_project.settings")
# settings.TESTING keys off `manage.py test`; present the same argv while they load.
_argv = sys.argv
sys.argv = ["manage.py", "test"]
try:
    django.setup()
finally:
    sys.argv = _argv


@pytest.fixture(scope="session", autouse=True)
def _django_test_environment():
    from django.test.utils import (
        setup_databases,
        setup_test_environment,
        teardown_databases,
        teardown_test_environment,
    )

    setup_test_environment()
    old_config = setup_databases(verbosity=0, interactive=False)
    yield
    teardown_databases(old_config, verbosity=0)
    teardown_test_environment()
