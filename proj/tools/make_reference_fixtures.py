#!/usr/bin/env python3
"""Regenerate the reference NetCDF fixtures under fixtures/.

The classic files are written with scipy's independent NetCDF writer so the
C++ reader is checked against bytes it did not produce. The HDF5 file stands
in for a NetCDF-4 archive and must be rejected.
"""

import pathlib
import sys

import numpy as np
from scipy.io import netcdf_file

OUT = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "fixtures")


def write_classic(path, version):
    with netcdf_file(path, "w", version=version) as f:
        f.title = "reference"
        f.model_id = "CESM1-CAM5"
        f.createDimension("time", 3)
        f.createDimension("lat", 2)
        f.createDimension("lon", 3)

        lat = f.createVariable("lat", "d", ("lat",))
        lat.units = "degrees_north"
        lat[:] = [30.0, 31.0]

        lon = f.createVariable("lon", "d", ("lon",))
        lon.units = "degrees_east"
        lon[:] = [-100.0, -99.0, -98.0]

        grid = f.createVariable("grid", "f", ("lat", "lon"))
        grid.units = "mm/day"
        grid[:] = np.array([[1, 2, 3], [4, 5, 6]], dtype="f4")

        pr = f.createVariable("pr", "f", ("time", "lat", "lon"))
        pr.units = "mm/day"
        pr._FillValue = np.float32(1e20)
        data = np.arange(18, dtype="f4").reshape(3, 2, 3) * 0.5
        data[1, 0, 2] = 1e20
        pr[:] = data

        t = f.createVariable("tas", "h", ("time", "lat", "lon"))
        t.units = "K"
        t.scale_factor = 0.01
        t.add_offset = 273.15
        t[:] = (np.arange(18, dtype="i2").reshape(3, 2, 3) * 10 - 50)

        code = f.createVariable("code", "b", ("lon",))
        code[:] = np.array([-1, 0, 7], dtype="i1")


def write_hdf5(path):
    import h5py

    with h5py.File(path, "w") as f:
        f.create_dataset("pr", data=np.zeros((2, 2), dtype="f4"))


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    write_classic(OUT / "reference_cdf1.nc", 1)
    write_classic(OUT / "reference_cdf2.nc", 2)
    write_hdf5(OUT / "reference_netcdf4.nc")
