from shared.exceptions import PrmTreeError


class VerificationInputError(PrmTreeError, ValueError):
    pass
