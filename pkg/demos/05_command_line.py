"""
The command-line pipeline
=========================

The ``eogscrub`` command runs synth -> prepare -> train -> eval -> report and
keeps everything under one workspace directory. This drives it in-process on a
small dataset with tiny models; the shell equivalent is shown alongside.
"""

from pathlib import Path

from eogscrub import cli

ws = Path("demo_output/workspace")
steps = [
    "synth --subjects 12 --seed 3",
    "prepare --scheme m1",
    "prepare --scheme m2",
    "train --scheme m1 --base-width 2 --max-epochs 3",
    "train --scheme m2 --base-width 2 --max-epochs 3",
    "eval",
    "report",
    "denoise --in demo_output/workspace/dataset/sub000.cont.eegr --scheme m1",
]
for step in steps:
    print(f"$ eogscrub {step} --out-dir {ws}")
    code = cli.main(step.split() + ["--out-dir", str(ws)])
    if code:
        raise SystemExit(code)

# %%
# Each run also leaves its fully resolved configuration next to the outputs.

print((ws / "train.resolved.cfg").read_text())
print(sorted(p.name for p in (ws / "reports").iterdir()))
