class BaseService:
    """Stateless domain service; collaborators arrive through __init__."""
