from di.providers import all_providers
from dishka import Container, make_container


def create_container() -> Container:
    return make_container(*all_providers)
