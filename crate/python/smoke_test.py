#!/usr/bin/env python3
"""Build the cmtor_py extension with cargo and exercise its main entry points."""

import shutil
import subprocess
import sys
import sysconfig
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build_module() -> Path:
    subprocess.run(
        ["cargo", "build", "-p", "cmtor-py", "--release"],
        cwd=ROOT,
        check=True,
    )
    src = ROOT / "target" / "release" / "libcmtor_py.so"
    if not src.exists():  # macOS fallback
        src = ROOT / "target" / "release" / "libcmtor_py.dylib"
    suffix = sysconfig.get_config_var("EXT_SUFFIX") or ".so"
    stage = Path(tempfile.mkdtemp(prefix="cmtor_py_"))
    dest = stage / f"cmtor_py{suffix}"
    shutil.copyfile(src, dest)
    return stage


def main() -> int:
    sys.path.insert(0, str(build_module()))
    import cmtor_py as m

    assert m.groups(1) == ["Z/1Z", "Z/2Z", "Z/3Z", "Z/4Z", "Z/2Z + Z/2Z", "Z/6Z"]
    assert "Z/9Z" in m.groups(3) and "Z/14Z" in m.groups(3)
    assert m.t_cm(9) == 27
    assert m.class_number(23) == 3
    assert m.threshold(11, 1) == 5
    assert m.threshold(23, 1, two_times=True) == 33
    assert m.delta(3, 2) == 1
    assert m.is_olson(7) and not m.is_olson(3)
    assert m.fingerprint(1) == ""
    assert m.r_count(5) == 2
    assert m.multiples_density([2, 3, 5]) == "11/15"
    assert m.max_group_count(1, 99) == (81, 15)
    table99 = m.table(99).splitlines()
    assert len(table99) == 50 and table99[3] == "7\tOlson"
    assert m.olson_upper(limit=1000, take=5).startswith("0.2662")
    assert 0.0076 < m.sum1_partial(100_000) < 0.0078

    for bad in (m.groups, m.t_cm):
        try:
            bad(4)
        except ValueError:
            pass
        else:
            raise AssertionError("even degree must be rejected")

    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
