import logging
import socket
import threading
import time

import pytest

from mlmscore import MaskedLMScorer, ModelHolder, ServiceConfig, build_demo_model, load_model

logging.getLogger("transformers").setLevel(logging.ERROR)


@pytest.fixture(scope="session")
def demo_model_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("model") / "demo"
    build_demo_model(str(out), seed=0)
    return out


@pytest.fixture(scope="session")
def demo_bundle(demo_model_dir):
    return load_model(str(demo_model_dir))


@pytest.fixture(scope="session")
def exact_scorer(demo_bundle):
    tokenizer, model = demo_bundle
    return MaskedLMScorer(tokenizer, model, max_batch=16, exact=True)


def free_port() -> int:
    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        return probe.getsockname()[1]


class LiveServer:
    """A uvicorn server running the app in a daemon thread."""

    def __init__(self, app):
        import uvicorn

        self.port = free_port()
        self.url = f"http://127.0.0.1:{self.port}"
        self._server = uvicorn.Server(
            uvicorn.Config(app, host="127.0.0.1", port=self.port, log_level="error")
        )
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    def start(self):
        self._thread.start()
        deadline = time.time() + 20
        while not self._server.started:
            if time.time() > deadline:
                raise RuntimeError("server did not start in time")
            time.sleep(0.02)
        return self

    def stop(self):
        self._server.should_exit = True
        self._thread.join(timeout=10)


@pytest.fixture(scope="session")
def live_service(demo_model_dir):
    from mlmscore import create_app

    holder = ModelHolder(ServiceConfig(model=str(demo_model_dir), max_batch=16))
    holder.load()
    assert holder.ready, holder.error
    server = LiveServer(create_app(holder)).start()
    yield server.url
    server.stop()


@pytest.fixture(scope="session")
def not_ready_service():
    """A live service whose model never finishes loading."""
    from mlmscore import create_app

    holder = ModelHolder(ServiceConfig(model="never-loaded"))
    server = LiveServer(create_app(holder)).start()
    yield server.url
    server.stop()
