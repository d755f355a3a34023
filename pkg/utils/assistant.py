import logging


class Assistant:
    def __init__(self, name: str, description: str, instructions: str):
        self.name = name
        self.description = description
        self.instructions = instructions
        self.logger = logging.getLogger(f"{type(self).__module__}.{type(self).__name__}")

    def _failure(self, exc: Exception) -> dict:
        self.logger.error("%s failed: %s", self.name, exc)
        return {'status': 'error', 'message': str(exc), 'error_type': type(exc).__name__}
