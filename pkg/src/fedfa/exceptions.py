"""Exception hierarchy shared by all modules."""


class FedFaError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(FedFaError, ValueError):
    pass


class DimensionMismatchError(FedFaError, ValueError):
    pass


class DataError(FedFaError):
    """Base class for dataset construction and ingestion failures."""


class DegenerateShardError(DataError, ValueError):
    pass


class SchemaMismatchError(DataError, ValueError):
    pass


class CSVParseError(DataError, ValueError):
    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class NonFiniteError(FedFaError, FloatingPointError):
    """Raised when a parameter update produces NaN or Inf."""


class ClientError(FedFaError):
    """Wraps an exception raised while training a specific client."""

    def __init__(self, client_id, cause):
        super().__init__(f"client {client_id}: {cause}")
        self.client_id = client_id
        self.cause = cause
