from .interactor import interactor_provider
from .service import service_provider

__all__ = [
    "all_providers",
    "interactor_provider",
    "service_provider",
]

all_providers = [
    service_provider,
    interactor_provider,
]
