"""Smoke test for the cortex_atlas extension module.

Build and install first:  pip install -e crates/py --no-build-isolation
"""
import json
import math
import sys
import tempfile
from pathlib import Path

import cortex_atlas as ca


def check(name, cond, detail=""):
    print(f"{'PASS' if cond else 'FAIL'}  {name}" + (f": {detail}" if detail else ""))
    return cond


def main():
    ok = True

    tri = ca.Mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
    disk = ca.harmonic_disk_map(tri)
    ok &= check("single triangle boundary", sorted(disk.boundary) == [0, 1, 2])
    ok &= check("boundary on unit circle", all(abs(math.hypot(u, v) - 1) < 1e-12 for u, v in disk.uv))

    grid = [[x, y, 0.1 * x * y] for y in range(5) for x in range(5)]
    faces = []
    for y in range(4):
        for x in range(4):
            a = 5 * y + x
            faces += [[a, a + 1, a + 6], [a, a + 6, a + 5]]
    sheet = ca.Mesh(grid, faces)
    ok &= check("euler characteristic", sheet.euler_characteristic() == 1)
    h = ca.harmonic_disk_map(sheet)
    corrected = ca.area_correct(h, sheet, max_iters=50)
    rms_h, _, _ = h.distortion(sheet)
    rms_c, _, _ = corrected.distortion(sheet)
    ok &= check("area correction lowers rms log rho", rms_c <= rms_h, f"{rms_h:.4f} -> {rms_c:.4f}")
    ok &= check("no folds", corrected.flipped_faces(sheet) == [])
    face, w, p = corrected.sample_back(sheet, *corrected.uv[12])
    ok &= check("sample_back recovers vertex", max(abs(a - b) for a, b in zip(p, grid[12])) < 1e-9)
    doc = json.loads(corrected.to_json())
    ok &= check("standalone disk map json", set(doc) >= {"version", "uv", "boundary"})

    a = [[0, 0, 0], [1, 0, 0], [2, 0, 0]]
    ok &= check("mdf flip symmetric", ca.mdf(a, a[::-1]) == 0.0)
    ok &= check("resample keeps endpoints", ca.resample(a, 5)[-1] == [2.0, 0.0, 0.0])
    lines = ca.StreamlineSet([a, [[0, 5, 0], [1, 5, 0], [2, 5, 0]], [[2, 0.1, 0], [0, 0.1, 0]]])
    clusters, skipped = ca.quickbundles(lines, theta=1.0, k=3)
    ok &= check("quickbundles", [c.members for c in clusters] == [[0, 2], [1]] and skipped == [])

    series = [[1, 2, 3, 4], [2, 4, 6, 8], [4, 3, 2, 1], [1, 1, 1, 1]]
    r = ca.seed_correlation(series, vertex=0)
    ok &= check("seed correlation", [round(x, 12) for x in r] == [1.0, 1.0, -1.0, 0.0], str(r))

    scene = ca.run_synthetic(rings=8, streamlines=200, samples=20, scales=[1.0, 1.5])
    scene.validate()
    ok &= check("synthetic scene", scene.mesh_ids == ["lh", "rh"] and scene.bundle_count > 0,
                f"{scene.total_vertices} vertices, {scene.bundle_count} bundles")
    edges = scene.graph_edges()
    ok &= check("graph edges consistent", all(s >= b >= 1 for _, _, b, s in edges))
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "scene.json"
        scene.save(str(path))
        again = ca.Scene.load(str(path))
        ok &= check("scene file round trip", again.to_json() == scene.to_json())
    ok &= check("deterministic", ca.run_synthetic(rings=8, streamlines=200, samples=20, scales=[1.0, 1.5]).to_json() == scene.to_json())

    try:
        ca.quickbundles(lines, theta=-1.0)
        ok &= check("negative theta rejected", False)
    except ValueError as e:
        ok &= check("negative theta rejected", True, str(e))

    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
