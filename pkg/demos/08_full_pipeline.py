"""
The full toy pipeline
=====================

Generate the bundled toy corpora, run every stage from a JSON config and
print the manifest.  A second run is served entirely from the stage cache.
"""
import json
import tempfile
import time
from pathlib import Path

from bitextforge.pipeline import run_pipeline
from bitextforge.toydata import make_toy_data

work = Path(tempfile.mkdtemp())
make_toy_data(work)
print(json.dumps(json.loads((work / "pipeline.json").read_text())["stages"], indent=1))

t0 = time.perf_counter()
manifest = run_pipeline(work / "pipeline.json")
print(f"first run {time.perf_counter() - t0:.1f} s")
for st in manifest.stages:
    print(f"{st.name:12} in {st.lines_in:6}  kept {st.lines_kept:6}  {st.rejections}")

t0 = time.perf_counter()
run_pipeline(work / "pipeline.json")
print(f"cached run {time.perf_counter() - t0:.3f} s")
print("planted:", (work / "planted.json").read_text())
