import numpy as np
import pytest

from phasefrac.energy import ElasticModel
from phasefrac.fields import Grid
from phasefrac.potentials import make_default_potentials
from phasefrac.sharp import (GeometryError, Polygon, SegmentSet, SharpGeometry1D,
                             SharpGeometry2D, affine_displacement, distance_field,
                             minkowski_content_estimate,
                             piecewise_rigid_displacement, sharp_energy,
                             sharp_energy_1d, sharp_energy_2d, zero_displacement)

RIGHT_HALF = [(0.5, 0.0), (1.0, 0.0), (1.0, 1.0), (0.5, 1.0)]
MID_SEGMENT = [[[0.5, 0.25], [0.5, 0.75]]]


def test_1d_phase_interface_only(P, elastic_1d):
    g = SharpGeometry1D((0.0, 1.0), phase_points=(0.5,), c_pieces=(0, 1),
                        u_pieces=((0.0, 0.0), (1.0, -0.5)))
    b = sharp_energy_1d(g, P, elastic_1d)
    assert b.e_elastic == pytest.approx(0.0, abs=1e-15)
    assert b.e_total == pytest.approx(1 / 3, abs=1e-10)


def test_1d_coincident_charges_crack_only(P, elastic_1d_free):
    g = SharpGeometry1D((0.0, 1.0), phase_points=(0.5,), crack_points=(0.5,),
                        c_pieces=(0, 1), u_pieces=((0.0, 0.0), (0.0, 0.3)))
    assert sharp_energy_1d(g, P, elastic_1d_free).e_total == pytest.approx(2.0, abs=1e-10)


def test_1d_disjoint_counts_both(P, elastic_1d_free):
    g = SharpGeometry1D((0.0, 1.0), phase_points=(0.75,), crack_points=(0.25,),
                        c_pieces=(0, 0, 1),
                        u_pieces=((0.0, 0.0), (0.0, 0.1), (0.0, 0.1)))
    assert sharp_energy_1d(g, P, elastic_1d_free).e_total == \
        pytest.approx(2 + 1 / 3, abs=1e-10)


def test_1d_coincidence_exclusion_amount(P, elastic_1d_free):
    apart = SharpGeometry1D((0.0, 1.0), phase_points=(0.7,), crack_points=(0.3,),
                            c_pieces=(0, 0, 1),
                            u_pieces=((0.0, 0.0), (0.0, 0.1), (0.0, 0.1)))
    onto = SharpGeometry1D((0.0, 1.0), phase_points=(0.3,), crack_points=(0.3,),
                           c_pieces=(0, 1), u_pieces=((0.0, 0.0), (0.0, 0.1)))
    drop = sharp_energy_1d(apart, P, elastic_1d_free).e_total - \
        sharp_energy_1d(onto, P, elastic_1d_free).e_total
    assert drop == pytest.approx(1 / 3, abs=1e-10)


def test_1d_theta_mode_residual(elastic_1d_free):
    Pt = make_default_potentials(theta=0.3)
    apart = SharpGeometry1D((0.0, 1.0), phase_points=(0.7,), crack_points=(0.3,),
                            c_pieces=(0, 0, 1),
                            u_pieces=((0.0, 0.0), (0.0, 0.1), (0.0, 0.1)))
    onto = SharpGeometry1D((0.0, 1.0), phase_points=(0.3,), crack_points=(0.3,),
                           c_pieces=(0, 1), u_pieces=((0.0, 0.0), (0.0, 0.1)))
    drop = sharp_energy_1d(apart, Pt, elastic_1d_free).e_total - \
        sharp_energy_1d(onto, Pt, elastic_1d_free).e_total
    assert drop == pytest.approx((1 - 0.3) / 3, abs=1e-10)


def test_1d_elastic_piecewise_exact(P):
    M = ElasticModel(lame_lambda=0.0, lame_mu=0.5, e0=np.array([[2.0]]))
    g = SharpGeometry1D((0.0, 1.0), phase_points=(0.5,), c_pieces=(0, 1),
                        u_pieces=((1.0, 0.0), (0.0, 0.5)))
    # pieces: (u' - c e0)^2 -> (1)^2 on (0, 1/2), (0 - 2)^2 on (1/2, 1)
    b = sharp_energy_1d(g, P, M)
    assert b.e_elastic == pytest.approx(0.5 * 1.0 + 0.5 * 4.0, abs=1e-12)


def test_1d_validation_errors():
    with pytest.raises(GeometryError):
        SharpGeometry1D((0.0, 1.0), phase_points=(0.5,), c_pieces=(0, 0),
                        u_pieces=((0.0, 0.0), (0.0, 0.0)))  # c does not jump
    with pytest.raises(GeometryError):
        SharpGeometry1D((0.0, 1.0), crack_points=(1.5,), c_pieces=(0, 0),
                        u_pieces=((0.0, 0.0), (0.0, 0.0)))  # exterior point
    with pytest.raises(GeometryError):
        SharpGeometry1D((0.0, 1.0), phase_points=(0.5,), c_pieces=(0, 1),
                        u_pieces=((0.0, 0.0), (0.0, 0.5)))  # u jumps off-crack


def test_1d_near_coincidence_warns():
    with pytest.warns(UserWarning, match="near-coincident"):
        SharpGeometry1D((0.0, 1.0), phase_points=(0.5,), crack_points=(0.5 + 1e-7,),
                        c_pieces=(0, 1, 1),
                        u_pieces=((0.0, 0.0), (0.0, 0.0), (0.0, 0.2)))


def test_2d_half_square_boundary_in_open_box(P, elastic_2d_free):
    g = SharpGeometry2D((0.0, 0.0), (1.0, 1.0), polygon=Polygon(RIGHT_HALF))
    b = sharp_energy_2d(g, P, elastic_2d_free)
    # only the dividing segment counts; box-boundary edges carry no length
    assert b.e_total == pytest.approx(1 / 3, abs=1e-10)


def test_2d_overlap_case(P, elastic_2d_free):
    g = SharpGeometry2D((0.0, 0.0), (1.0, 1.0), polygon=Polygon(RIGHT_HALF),
                        segments=SegmentSet(MID_SEGMENT),
                        u_spec=piecewise_rigid_displacement(
                            (0.5, 0.5), (0.0, 1.0), (0.002, 0.0), (-0.002, 0.0)))
    b = sharp_energy_2d(g, P, elastic_2d_free)
    assert b.e_phase == pytest.approx((1 / 3) * 0.5, abs=1e-10)
    assert b.e_crack == pytest.approx(2.0 * 0.5, abs=1e-12)
    assert b.e_elastic == 0.0
    assert b.e_total == pytest.approx(7 / 6, abs=1e-10)


def test_2d_empty_zero(P, elastic_2d_free):
    g = SharpGeometry2D((0.0, 0.0), (1.0, 1.0))
    assert sharp_energy_2d(g, P, elastic_2d_free).e_total == 0.0


def test_2d_affine_elastic_exact_areas(P):
    M = ElasticModel(lame_lambda=0.2, lame_mu=0.5, e0=np.array([[1.0, 0.0], [0.0, 0.0]]))
    F = np.array([[0.3, 0.0], [0.0, 0.1]])
    g = SharpGeometry2D((0.0, 0.0), (1.0, 1.0), polygon=Polygon(RIGHT_HALF),
                        u_spec=affine_displacement(F))
    b = sharp_energy_2d(g, P, M)
    q_in = M.form(0.5 * (F + F.T) - M.e0)
    q_out = M.form(0.5 * (F + F.T))
    assert b.e_elastic == pytest.approx(0.5 * q_in + 0.5 * q_out, rel=1e-12)


def test_2d_crack_scaling(P, elastic_2d_free):
    segs1 = SegmentSet([[[0.2, 0.3], [0.2, 0.6]], [[0.6, 0.1], [0.9, 0.1]]])
    segs2 = SegmentSet(2.0 * segs1.endpoints)
    g1 = SharpGeometry2D((0.0, 0.0), (2.0, 2.0), segments=segs1)
    g2 = SharpGeometry2D((0.0, 0.0), (2.0, 2.0), segments=segs2)
    assert sharp_energy_2d(g2, P, elastic_2d_free).e_crack == \
        pytest.approx(2.0 * sharp_energy_2d(g1, P, elastic_2d_free).e_crack, rel=1e-12)


def test_polygon_self_intersection_rejected():
    with pytest.raises(GeometryError):
        Polygon([(0, 0), (1, 1), (1, 0), (0, 1)])


def test_segments_outside_domain_rejected():
    with pytest.raises(GeometryError):
        SharpGeometry2D((0.0, 0.0), (1.0, 1.0),
                        segments=SegmentSet([[[0.5, 0.5], [1.5, 0.5]]]))


def test_distance_field_polygon(P):
    grid = Grid((0.0, 0.0), (1.0, 1.0), (64, 64))
    d = distance_field(Polygon(RIGHT_HALF), grid).values
    x, y = grid.meshgrid()
    inside = x > 0.5
    assert np.all(d[inside] == 0.0)
    outside = x < 0.5
    assert np.abs(d[outside] - (0.5 - x[outside])).max() < 1e-12


def test_distance_field_segment_perpendicular():
    grid = Grid((0.0, 0.0), (1.0, 1.0), (64, 64))
    d = distance_field(SegmentSet(MID_SEGMENT), grid).values
    # at (3/4, 1/2) the nearest segment point is (1/2, 1/2)
    i = int((0.75 - grid.spacing[0] / 2) / grid.spacing[0])
    j = int((0.5 - grid.spacing[1] / 2) / grid.spacing[1])
    x = grid.centers(0)[i]
    assert d[i, j] == pytest.approx(abs(x - 0.5), abs=1e-12)


def test_distance_field_lipschitz():
    grid = Grid((0.0, 0.0), (1.0, 1.0), (128, 128))
    segs = SegmentSet([[[0.3, 0.2], [0.8, 0.9]]])
    d = distance_field(segs, grid).values
    for axis, h in enumerate(grid.spacing):
        assert np.abs(np.diff(d, axis=axis)).max() <= h + 1e-12


def test_minkowski_single_segment_band(P):
    grid = Grid((0.0, 0.0), (1.0, 1.0), (1024, 1024))
    segs = SegmentSet(MID_SEGMENT)
    h = grid.spacing[0]
    for r in (1 / 8, 1 / 16, 1 / 32):
        est = minkowski_content_estimate(segs, r, grid)
        band_mid = 0.5 + np.pi * r / 2.0
        assert abs(est - band_mid) <= 4.0 * h / r * 0.5


def test_minkowski_empty_zero():
    grid = Grid((0.0, 0.0), (1.0, 1.0), (128, 128))
    assert minkowski_content_estimate(SegmentSet(np.zeros((0, 2, 2))), 0.1, grid) == 0.0


def test_minkowski_two_parallel_segments_additive():
    grid = Grid((0.0, 0.0), (1.0, 1.0), (1024, 1024))
    segs = SegmentSet([[[0.25, 0.2], [0.25, 0.5]], [[0.75, 0.3], [0.75, 0.9]]])
    r = 1 / 16
    est = minkowski_content_estimate(segs, r, grid)
    expected = 0.3 + 0.6 + np.pi * r
    assert abs(est - expected) <= 4.0 * grid.spacing[0] / r * 0.9


def test_minkowski_unresolvable_raises():
    grid = Grid((0.0, 0.0), (1.0, 1.0), (16, 16))
    with pytest.raises(ValueError, match="unresolvable"):
        minkowski_content_estimate(SegmentSet(MID_SEGMENT), 0.05, grid)


def test_sharp_energy_dispatch(P, elastic_1d_free, elastic_2d_free):
    g1 = SharpGeometry1D((0.0, 1.0))
    g2 = SharpGeometry2D((0.0, 0.0), (1.0, 1.0))
    assert sharp_energy(g1, P, elastic_1d_free).e_total == 0.0
    assert sharp_energy(g2, P, elastic_2d_free).e_total == 0.0
    with pytest.raises(TypeError):
        sharp_energy("nope", P, elastic_1d_free)


def test_quadratic_uspec_rejected_in_sharp_energy(P, elastic_2d_free):
    from phasefrac.sharp import quadratic_displacement
    g = SharpGeometry2D((0.0, 0.0), (1.0, 1.0), u_spec=quadratic_displacement())
    with pytest.raises(GeometryError, match="constant strain"):
        sharp_energy_2d(g, P, elastic_2d_free)


def test_2d_tube_bound_reported(P):
    M = ElasticModel(lame_lambda=0.0, lame_mu=0.5, e0=np.zeros((2, 2)))
    F = np.array([[0.3, 0.0], [0.0, 0.1]])
    g = SharpGeometry2D((0.0, 0.0), (1.0, 1.0), segments=SegmentSet(MID_SEGMENT),
                        u_spec=affine_displacement(F))
    b = sharp_energy_2d(g, P, M)
    assert 0.0 < b.excluded_bound < 1e-8  # O(tol_geom) by construction
