from .app import create_app, ServiceConfig, load_config

__all__ = ["create_app", "ServiceConfig", "load_config"]
