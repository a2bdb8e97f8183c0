"""Writes a small PLY in the vertex layout used by common 3DGS trainers.

The file is produced with numpy alone, independently of the C++ writer, and
serves as an interop fixture: normals, 45 higher-order SH coefficients, no
feature channels.
"""
import argparse

import numpy as np


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("output")
    parser.add_argument("--count", type=int, default=64)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    n = args.count
    names = ["x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"]
    names += [f"f_rest_{i}" for i in range(45)]
    names += ["opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"]
    data = np.zeros(n, dtype=[(name, "<f4") for name in names])

    data["x"], data["y"], data["z"] = rng.normal(scale=0.5, size=(3, n))
    for c in range(3):
        data[f"f_dc_{c}"] = rng.normal(scale=0.8, size=n)
    for i in range(45):
        data[f"f_rest_{i}"] = rng.normal(scale=0.05, size=n)
    data["opacity"] = rng.normal(scale=2.0, size=n)
    for k in range(3):
        data[f"scale_{k}"] = rng.uniform(-5.0, -2.0, size=n)
    # Trainers store raw, unnormalised quaternions.
    quat = rng.normal(size=(n, 4)) * rng.uniform(0.5, 2.0, size=(n, 1))
    for k in range(4):
        data[f"rot_{k}"] = quat[:, k]

    header = "ply\nformat binary_little_endian 1.0\n"
    header += f"element vertex {n}\n"
    header += "".join(f"property float {name}\n" for name in names)
    header += "end_header\n"
    with open(args.output, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(data.tobytes())


if __name__ == "__main__":
    main()
