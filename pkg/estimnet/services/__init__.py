from estimnet.services.estimation_service import estimation_service

__all__ = ["estimation_service"]
