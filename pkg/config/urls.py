# config/urls.py
from django.contrib import admin
from django.urls import path, include

urlpatterns = [
    # Django admin (built-in)
    path('admin/', admin.site.urls),

    # Read-only experiment ledger
    path('api/', include('experiments.urls')),
]
