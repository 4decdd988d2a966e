from pathlib import Path
from typing import Any

from dotenv import find_dotenv
from pydantic import Field, SecretStr
from pydantic_settings import BaseSettings, SettingsConfigDict

from schema.models import LogLevel


# settings class to manage environment configuration
class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=find_dotenv(),  # locate the .env file
        env_file_encoding="utf-8",  # set encoding for the .env file
        env_ignore_empty=True,  # ignore empty environment variables
        extra="ignore",  # ignore extra fields not defined in the class
        validate_default=False,  # disable default validation
    )
    MODE: str | None = None  # mode of the application (e.g., dev, prod)

    HOST: str = "0.0.0.0"  # default host
    PORT: int = 8000  # default port

    AUTH_SECRET: SecretStr | None = None  # bearer token for the prediction service

    RUNS_DIR: Path = Path("runs")  # root of run output directories
    LOG_LEVEL: LogLevel = LogLevel.INFO  # root log level
    THREADS: int = Field(default=1, ge=1)  # default number of concurrent trials

    # post-initialization method for settings
    def model_post_init(self, __context: Any) -> None:
        # expand ~ in the runs directory
        self.RUNS_DIR = self.RUNS_DIR.expanduser()

    # check if the application is in development mode
    def is_dev(self) -> bool:
        return self.MODE == "dev"


# create an instance of the settings
settings = Settings()
