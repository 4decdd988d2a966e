import os
from typing import Any

import httpx

from schema import PredictInput, PredictionOutput, ResultRecord, ServiceMetadata


class RunClientError(Exception):
    """custom error for run client operations."""


class RunClient:
    """client for the prediction service over completed runs."""

    def __init__(
        self,
        base_url: str = "http://localhost",
        timeout: float | None = None,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        """sets up the connection; ``transport`` lets tests swap the network out."""
        self.base_url = base_url
        self.auth_secret = os.getenv("AUTH_SECRET")
        self.timeout = timeout
        self._client = httpx.Client(base_url=base_url, timeout=timeout, transport=transport)

    @property
    def _headers(self) -> dict[str, str]:
        """generates auth headers if secret exists."""
        headers = {}
        if self.auth_secret:
            headers["Authorization"] = f"Bearer {self.auth_secret}"
        return headers

    def _request(self, method: str, path: str, **kwargs: Any) -> Any:
        try:
            response = self._client.request(method, path, headers=self._headers, **kwargs)
            response.raise_for_status()
        except httpx.HTTPStatusError as e:
            raise RunClientError(f"Error: {e.response.status_code} {e.response.text}")
        except httpx.HTTPError as e:
            raise RunClientError(f"Error: {e}")
        return response.json()

    def info(self) -> ServiceMetadata:
        """fetches service metadata and available runs."""
        return ServiceMetadata.model_validate(self._request("GET", "/info"))

    def results(self, run: str) -> ResultRecord:
        """aggregate results of a completed run."""
        return ResultRecord.model_validate(self._request("GET", f"/runs/{run}/results"))

    def predict(self, run: str, x: list[list[float]], trial: int = 0) -> PredictionOutput:
        """predictive mean, std and 95% interval per input row."""
        request = PredictInput(x=x, trial=trial)
        payload = self._request("POST", f"/runs/{run}/predict", json=request.model_dump())
        return PredictionOutput.model_validate(payload)

    def close(self) -> None:
        self._client.close()
