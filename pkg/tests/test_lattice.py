"""Honeycomb construction, bond labels, and the four-region pizza partition."""

import numpy as np
import pytest

from tme import lattice
from tme.lattice import (
    REGION_CODES,
    build_lattice,
    boundary_bond_count,
    connected_components,
    default_regions,
    junction_classes,
    region_adjacency,
    region_map_from_csv,
    region_map_to_csv,
    regions_from_grid,
)


# ---------------------------------------------------------------------------
# lattice construction


def test_counts_n4():
    lat = build_lattice(4)
    assert lat.sites == 32
    assert len(lat.nn_bonds) == 48
    assert len(lat.nnn_bonds) == 96


def test_counts_n16():
    assert build_lattice(16).sites == 512


@pytest.mark.parametrize("n", [4, 6, 8])
def test_counting_formulas(n):
    lat = build_lattice(n)
    assert lat.sites == 2 * n * n
    assert len(lat.nn_bonds) == 3 * n * n
    assert len(lat.nnn_bonds) == 6 * n * n


def test_odd_size_rejected():
    with pytest.raises(ValueError):
        build_lattice(5)


def test_tiny_size_needs_optin():
    with pytest.raises(ValueError):
        build_lattice(2)
    assert build_lattice(2, allow_tiny=True).sites == 8


def test_every_site_has_one_bond_of_each_label():
    lat = build_lattice(6)
    labels = {s: [] for s in range(lat.sites)}
    for i, j, lab, _, _ in lat.nn_bonds:
        labels[int(i)].append(int(lab))
        labels[int(j)].append(int(lab))
    assert all(sorted(v) == [0, 1, 2] for v in labels.values())


def test_nn_bonds_connect_opposite_sublattices():
    lat = build_lattice(4)
    for i, j, _, _, _ in lat.nn_bonds:
        assert lat.sublattice[i] != lat.sublattice[j]


def test_nnn_bonds_connect_same_sublattice():
    lat = build_lattice(4)
    for i, j, _, _, _ in lat.nnn_bonds:
        assert lat.sublattice[i] == lat.sublattice[j]


def test_nnn_orientation_signs():
    # each next-nearest pair appears once, carrying the orientation sign;
    # the two orientations are globally balanced
    lat = build_lattice(4)
    pairs = set()
    total = 0
    for i, j, s, _, _ in lat.nnn_bonds:
        assert int(s) in (-1, 1)
        key = frozenset((int(i), int(j)))
        assert key not in pairs
        pairs.add(key)
        total += int(s)
    assert total == 0


def test_nnn_degree_is_six():
    lat = build_lattice(4)
    deg = np.zeros(lat.sites, dtype=int)
    for i, j, _, _, _ in lat.nnn_bonds:
        deg[i] += 1
        deg[j] += 1
    assert np.all(deg == 6)


def test_whole_lattice_connected():
    lat = build_lattice(6)
    assert connected_components(lat, np.arange(lat.sites)) == 1


# ---------------------------------------------------------------------------
# default region partition


def test_default_regions_partition_and_adjacency():
    lat = build_lattice(8)
    rm = default_regions(lat)
    sizes = np.bincount(rm.region, minlength=4)
    assert sizes.sum() == lat.sites
    assert all(sizes > 0)
    adj = region_adjacency(lat, rm)
    a, b, c = REGION_CODES["A"], REGION_CODES["B"], REGION_CODES["C"]
    assert (min(a, b), max(a, b)) in adj
    assert (min(a, c), max(a, c)) in adj
    assert (min(b, c), max(b, c)) in adj


@pytest.mark.parametrize("n", [6, 8, 10, 12])
def test_default_regions_all_connected(n):
    lat = build_lattice(n)
    rm = default_regions(lat)
    for name in "ABCL":
        sites = np.where(rm.region == REGION_CODES[name])[0]
        assert connected_components(lat, sites) == 1, name


def test_default_regions_all_junction_classes_present():
    lat = build_lattice(10)
    jc = junction_classes(lat, default_regions(lat))
    # the pizza has four triple junctions: ABC in the middle and the three
    # AB-Lambda, AC-Lambda, BC-Lambda meeting points on the outer rim
    assert set(jc) == {(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)}


def test_boundary_length_grows_linearly():
    b8 = boundary_bond_count(build_lattice(8), default_regions(build_lattice(8)))
    b16 = boundary_bond_count(build_lattice(16), default_regions(build_lattice(16)))
    assert b8 > 0
    assert abs(b16 / b8 - 2.0) <= 0.2


def test_default_regions_too_small():
    with pytest.raises(ValueError):
        default_regions(build_lattice(4))


def test_balanced_bc_band_at_sloped_sizes():
    # the sloped layout zigzags the B|C seam so the two sectors stay close
    # in size even though the seam is not an exact mirror line
    lat = build_lattice(10)
    rm = default_regions(lat)
    sizes = np.bincount(rm.region, minlength=4)
    assert sizes[REGION_CODES["B"]] == sizes[REGION_CODES["C"]]


def test_translating_regions_preserves_sizes():
    # shifting the whole assignment by a lattice translation permutes sites
    # but cannot change any region's cardinality
    lat = build_lattice(8)
    rm = default_regions(lat)
    n = lat.n_cells
    shifted = np.empty_like(rm.region)
    for s in range(lat.sites):
        x, y, sub = lat.cell_of(s)
        t = lat.site((x + 1) % n, (y + 2) % n, sub)
        shifted[t] = rm.region[s]
    assert np.array_equal(
        np.bincount(shifted, minlength=4), np.bincount(rm.region, minlength=4)
    )


# ---------------------------------------------------------------------------
# explicit grids and CSV export


def test_regions_from_grid_quadrants():
    lat = build_lattice(4)
    rm = regions_from_grid(lat, ["AABB", "AABB", "CCLL", "CCLL"])
    assert np.array_equal(np.bincount(rm.region, minlength=4), [8, 8, 8, 8])


def test_regions_from_grid_shape_errors():
    lat = build_lattice(4)
    with pytest.raises(ValueError):
        regions_from_grid(lat, ["AABB", "AABB", "CCLL"])  # missing row
    with pytest.raises(ValueError):
        regions_from_grid(lat, ["AAXB", "AABB", "CCLL", "CCLL"])  # bad label


def test_csv_round_trip():
    lat = build_lattice(8)
    rm = default_regions(lat)
    text = region_map_to_csv(lat, rm)
    assert text.splitlines()[0] == "site,cell_x,cell_y,sublattice,region"
    assert len(text.splitlines()) == lat.sites + 1
    back = region_map_from_csv(text, lat.sites)
    assert np.array_equal(back.region, rm.region)


def test_csv_rejects_wrong_site_count():
    lat = build_lattice(4)
    rm = regions_from_grid(lat, ["AABB", "AABB", "CCLL", "CCLL"])
    text = region_map_to_csv(lat, rm)
    with pytest.raises(ValueError):
        region_map_from_csv(text, 128)
