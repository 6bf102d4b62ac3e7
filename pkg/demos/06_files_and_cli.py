# Logs and models on disk.
#
# Logs are tab-separated with a header row. Models are a compact binary file
# holding both factor tables, both vocabularies and the threshold table, so a
# loaded model can score raw identifiers directly.

import tempfile
from pathlib import Path

from playaffinity import SynthConfig, generate, load, read_log, save, write_log
from playaffinity.cli import main

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    log, truth = generate(SynthConfig(user_count=500, entity_count=200, days=10, seed=2))
    write_log(log, tmp / "log.tsv")
    print((tmp / "log.tsv").read_text().splitlines()[:3])

    back, stats = read_log(tmp / "log.tsv")
    print(f"read back {stats.accepted} rows, {stats.rejected} rejected, identical: {back == log}")

    save(truth.model, tmp / "truth.bin")
    model = load(tmp / "truth.bin")
    print(f"model file {(tmp / 'truth.bin').stat().st_size} bytes, K={model.k}")
    print("affinity of User_0 for Entity_0..2:", model.predict_ids(["User_0"] * 3, ["Entity_0", "Entity_1", "Entity_2"]))
    print("an unknown user falls back to the UNK row:", model.predict_ids(["stranger"], ["Entity_0"]))

    # The same steps through the command line interface.
    main(["train", "--input", str(tmp / "log.tsv"), "--k", "8", "--model-out", str(tmp / "m.bin")])
    main(["evaluate", "--model", str(tmp / "m.bin"), "--test", str(tmp / "log.tsv"), "--test-day", "10"])
