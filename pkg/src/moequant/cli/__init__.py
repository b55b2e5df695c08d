from moequant.cli.main import app

__all__ = ["app"]
