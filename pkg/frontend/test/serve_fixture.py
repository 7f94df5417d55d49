"""Test fixture: start the review service on an ephemeral port with a small
scoring model and an empty queue; print the port as JSON and serve until
killed."""

import json
import sys
import tempfile

import numpy as np

from biasflagger.dataset import synthetic_lexicon
from biasflagger.features import FeaturizerConfig
from biasflagger.labeling import GENERAL_TASK
from biasflagger.model import init_model
from biasflagger.service import QueueStore, serve


def main() -> None:
    config = FeaturizerConfig(n_buckets=2**10, embed_dim=8)
    model = init_model(config, (GENERAL_TASK,), seed=3, hidden_dim=4)
    model.head_w[:] = np.random.default_rng(0).normal(0, 2.0, model.head_w.shape)
    model.head_b[:] = 2.0
    model.metadata = {"arch": "binary-general", "trained": True}

    store = QueueStore(tempfile.mkdtemp(prefix="biasflagger-e2e-"))
    server = serve(store, model, synthetic_lexicon(), addr=("127.0.0.1", 0), threshold=0.5)
    print(json.dumps({"port": server.server_address[1]}), flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        store.close()


if __name__ == "__main__":
    sys.exit(main())
