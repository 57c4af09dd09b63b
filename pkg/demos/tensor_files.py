"""
The .rimt tensor file format
============================

Float32 tensors cross the package boundary as small binary files:
magic "RIMT", a version, a dtype code, the shape, then the row-major
payload. Readers validate everything and classify each malformation.
"""

import tempfile
from pathlib import Path

import numpy as np

from rim.interchange import TensorFormatError, read_tensor, write_tensor

root = Path(tempfile.mkdtemp(prefix="rim_demo_"))
path = root / "example.rimt"

a = np.arange(24, dtype=np.float32).reshape(2, 3, 4)
write_tensor(a, path)
print(f"wrote {path.stat().st_size} bytes for shape {a.shape}")

back = read_tensor(path)
print("round trip bit-exact:", back.as_array().tobytes() == a.tobytes())

# malformed files fail loudly, with a machine-readable kind
good = path.read_bytes()
for kind, blob in (
    ("bad_magic", b"JUNK" + good[4:]),
    ("bad_version", good[:4] + b"\x07\x00" + good[6:]),
    ("bad_dtype", good[:6] + b"\x42" + good[7:]),
    ("truncated", good[:-5]),
    ("trailing_data", good + b"\x00\x00"),
):
    bad = root / f"{kind}.rimt"
    bad.write_bytes(blob)
    try:
        read_tensor(bad)
        print(f"{kind}: unexpectedly parsed")
    except TensorFormatError as e:
        print(f"{kind:<13} -> kind={e.kind!r}")

# non-finite payloads are rejected on both ends
try:
    write_tensor(np.array([np.nan], dtype=np.float32), root / "nan.rimt")
except Exception as e:
    print("writing NaN:", type(e).__name__)
