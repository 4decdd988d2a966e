from client.client import RunClient, RunClientError

__all__ = ["RunClient", "RunClientError"]
