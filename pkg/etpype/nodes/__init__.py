from .utils import build_geometry, build_state, build_field  # noqa
