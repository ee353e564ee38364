"""Builds the extension module in release mode and checks a few results.

Usage: python3 python/smoke_test.py
"""

import math
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def build() -> pathlib.Path:
    subprocess.run(["cargo", "build", "-p", "contact-geom-py", "--release"], cwd=ROOT, check=True)
    lib = ROOT / "target" / "release" / "libcontact_geom.so"
    dest = pathlib.Path(tempfile.mkdtemp()) / "contact_geom.so"
    shutil.copy(lib, dest)
    return dest.parent


def main() -> None:
    sys.path.insert(0, str(build()))
    import contact_geom as cg

    assert abs(cg.hermitian([1, 0, 0, 0], [1, 0, 0, 0]) - 1) < 1e-15
    assert cg.reeb([1, 0, 0, 0]) == [0, 1, 0, 0]

    clifford = cg.Surface.catalog("clifford", nu=64)
    assert clifford.shape == (64, 64)
    report = clifford.analyze()
    assert report["beta"]["max_abs"] <= 1e-10, report["beta"]
    assert abs(clifford.area() - 2 * math.pi**2) < 1e-6
    assert clifford.willmore_energy() < 1e-10

    sphere = cg.Surface.catalog("geodesic_sphere", nu=64)
    beta = sphere.beta()
    for (u, v), p, b in zip(sphere.coords(), sphere.points(), (x for row in beta for x in row)):
        assert abs(b - math.asin(p[2])) < 1e-8

    with tempfile.TemporaryDirectory() as tmp:
        path = str(pathlib.Path(tmp) / "sphere.txt")
        sphere.save(path)
        copy = cg.Surface.load(path)
        assert copy.shape == sphere.shape

    study = cg.verify("geodesic_sphere", "curvature", [32, 64, 128])
    assert study["passed"] and study["observed_order"] >= 1.7, study

    flow = cg.descend("rtorus", {"r": 0.885}, mode="r-only")
    assert flow["converged"] and abs(flow["r_final"] - math.pi / 4) < 1e-6

    try:
        cg.Surface.catalog("nosuch")
    except cg.GeomError as e:
        assert "unknown surface" in str(e)
    else:
        raise AssertionError("expected GeomError")

    names = [e["name"] for e in cg.catalog_list()]
    assert names == ["clifford", "geodesic_sphere", "rtorus"], names
    print("python smoke test: ok")


if __name__ == "__main__":
    main()
