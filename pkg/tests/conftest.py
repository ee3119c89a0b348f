import random
import threading
import time

import pytest

from ciphercast.paillier import generate_keys


@pytest.fixture(scope="session")
def key64():
    return generate_keys(64, random.Random(640))


@pytest.fixture(scope="session")
def key128():
    return generate_keys(128, random.Random(1280))


@pytest.fixture(scope="session")
def key256():
    return generate_keys(256, random.Random(2560))


@pytest.fixture()
def rng():
    return random.Random(0xC1F)


@pytest.fixture(scope="session")
def live_server(tmp_path_factory):
    """A real uvicorn server on an ephemeral localhost port."""
    import uvicorn

    from ciphercast.server import create_app

    data_dir = tmp_path_factory.mktemp("volumes")
    app = create_app(data_dir, pixel_budget=16384, workers=1)
    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("server did not start")
        time.sleep(0.02)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)
