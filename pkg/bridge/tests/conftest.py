import pytest
from fastapi.testclient import TestClient

from xlt_bridge.app import create_app
from xlt_bridge.config import BridgeConfig

LANGS = ("deu_Latn", "eng_Latn")


def client_for(config: BridgeConfig) -> TestClient:
    # raise_server_exceptions=False lets the app's 500 handler answer
    return TestClient(create_app(config), raise_server_exceptions=False)


def transport_for(client: TestClient):
    def transport(method, path, payload):
        response = client.request(method, path, json=payload)
        return response.status_code, response.json()

    return transport


@pytest.fixture
def identity_client():
    return client_for(BridgeConfig(mt="mock:identity", languages=LANGS))
