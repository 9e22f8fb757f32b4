class BudgetRFError(Exception):
    pass


class DataError(BudgetRFError, ValueError):
    """Malformed input data.  ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class ModelFormatError(BudgetRFError, ValueError):
    pass


class ModelVersionError(ModelFormatError):
    pass


class EmptyForestError(BudgetRFError, ValueError):
    pass
