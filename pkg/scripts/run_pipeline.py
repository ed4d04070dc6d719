"""Drive the full command line pipeline on synthetic data.

Steps: synthesize an image, learn a dictionary with the SA coder, write
per-patch QUBOs, solve them, reconstruct the image from the best states,
and rebuild the report from the stored artifacts. Everything runs through
subprocesses exactly as a user would type it.
"""

from __future__ import annotations

import argparse
import subprocess
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent


def run(*args: str) -> None:
    cmd = [sys.executable, "-m", "scqubo.cli", *args]
    print("+", " ".join(cmd[2:]))
    subprocess.run(cmd, check=True)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/pipeline_demo")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    root = Path(args.out)
    data = root / "data"
    root.mkdir(parents=True, exist_ok=True)

    subprocess.run(
        [sys.executable, str(HERE / "make_demo_data.py"), "--out", str(data), "--seed", str(args.seed)],
        check=True,
    )

    ini = root / "config.ini"
    ini.write_text(
        "\n".join(
            [
                "[data]",
                f"dataset = {data / 'demo.pgm'}",
                "",
                "[dictionary]",
                "p = 8",
                f"path = {root / 'learn' / 'dictionary.json'}",
                "",
                "[coding]",
                "lambda = 0.1",
                "",
                "[learning]",
                "epochs = 5",
                "s_target = 0.25",
                "",
                "[sampler]",
                "name = sa",
                "sweeps = 200",
                "reads = 100",
                "",
                "[run]",
                f"seed = {args.seed}",
                "",
            ]
        )
    )

    run("learn-dict", "--config", str(ini), "--out", str(root / "learn"), "--p", "8")
    run("build-qubo", "--config", str(ini), "--out", str(root / "qubos"))
    run("solve", "--config", str(ini), "--out", str(root / "solve"))
    run("reconstruct", "--config", str(ini), "--run", str(root / "solve"), "--out", str(root / "recon"))
    run("report", "--run", str(root / "solve"), "--out", str(root / "rebuilt"))

    print("\nartifacts:")
    for path in sorted(root.rglob("*")):
        if path.is_file():
            print(f"  {path.relative_to(root)}")


if __name__ == "__main__":
    main()
