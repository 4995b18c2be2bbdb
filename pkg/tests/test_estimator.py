import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from radialcal.calibration import calibrate, objective_j
from radialcal.distortion import QuadCubic, distort_pixel
from radialcal.errors import OutOfRange
from radialcal.estimator import PlanarCalibrator, RadialUndistorter, check_dataset

from conftest import DESKTOP_M3


class TestCheckDataset:
    def test_passthrough(self, noiseless_quadcubic):
        ds = noiseless_quadcubic[0]
        assert check_dataset(ds) is ds

    def test_from_arrays(self, noiseless_quadcubic):
        ds = noiseless_quadcubic[0]
        again = check_dataset(np.array(ds.views), ds.target_points)
        np.testing.assert_array_equal(again.views, ds.views)

    def test_array_without_target(self, noiseless_quadcubic):
        with pytest.raises(ValueError, match="target_points"):
            check_dataset(np.array(noiseless_quadcubic[0].views))

    def test_dataset_with_target(self, noiseless_quadcubic):
        ds = noiseless_quadcubic[0]
        with pytest.raises(ValueError):
            check_dataset(ds, ds.target_points)


class TestPlanarCalibrator:
    def test_params(self):
        est = PlanarCalibrator(model="poly24", tolx=1e-8)
        p = est.get_params()
        assert p == dict(model="poly24", max_iters=120, tolx=1e-8, tolfun=1e-5, max_fn_evals=8000)
        est.set_params(max_iters=5)
        assert est.max_iters == 5
        c = clone(est)
        assert c.get_params() == est.get_params() and c is not est

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            PlanarCalibrator().transform(np.zeros((1, 2)))

    def test_bad_model(self, noiseless_quadcubic):
        with pytest.raises(ValueError):
            PlanarCalibrator(model="du").fit(noiseless_quadcubic[0])

    def test_fit_matches_function(self, noisy_poly24):
        ds, _ = noisy_poly24
        est = PlanarCalibrator(model="quadcubic").fit(ds)
        ref = calibrate(ds, "quadcubic")
        assert est.objective_ == ref.final_j
        assert est.n_iter_ == ref.iterations
        assert est.score(ds) == -est.objective_

    def test_fit_from_arrays(self, noiseless_quadcubic):
        ds, truth = noiseless_quadcubic
        est = PlanarCalibrator().fit(np.array(ds.views), ds.target_points)
        np.testing.assert_allclose(est.intrinsics_.to_vector(), truth.intrinsics.to_vector(), rtol=1e-6)
        np.testing.assert_allclose(est.predict(), ds.views, atol=1e-6)

    def test_transform_round_trip(self, noiseless_quadcubic, rng):
        est = PlanarCalibrator().fit(noiseless_quadcubic[0])
        ideal = rng.uniform([150, 100], [450, 300], (50, 2))
        back = est.transform(est.inverse_transform(ideal))
        np.testing.assert_allclose(back, ideal, atol=1e-8)

    def test_transform_undoes_observation(self, noiseless_quadcubic):
        # undistorting the observed corners gives the distortion-free projection
        ds, truth = noiseless_quadcubic
        est = PlanarCalibrator().fit(ds)
        flat = PlanarCalibrator().fit(ds)
        flat.distortion_ = QuadCubic()
        np.testing.assert_allclose(est.transform(ds.views[0]), flat.predict()[0], atol=1e-6)

    def test_score_on_other_data(self, noisy_poly24):
        ds, truth = noisy_poly24
        est = PlanarCalibrator(model="poly2").fit(ds)
        assert est.score(ds) == pytest.approx(-objective_j(est.intrinsics_, est.distortion_, est.poses_, ds))


class TestRadialUndistorter:
    KW = dict(model="quadcubic", k1=DESKTOP_M3[0], k2=DESKTOP_M3[1],
              alpha=277.1449, beta=270.5582, gamma=-0.5731, u0=153.9882, v0=119.8105)

    def test_round_trip(self, rng):
        est = RadialUndistorter(**self.KW).fit()
        ideal = rng.uniform(40, 260, (100, 2))
        np.testing.assert_allclose(est.transform(est.inverse_transform(ideal)), ideal, atol=1e-9)
        assert est.valid_range_.rd_max > 0

    def test_matches_library(self, rng):
        est = RadialUndistorter(**self.KW).fit()
        ideal = rng.uniform(40, 260, (10, 2))
        np.testing.assert_array_equal(est.inverse_transform(ideal), distort_pixel(est.distortion_, est.intrinsics_, ideal))

    def test_in_pipeline(self, rng):
        # undistort then redistort is the identity
        undist = RadialUndistorter(**self.KW)
        pipe = make_pipeline(undist).fit(None)
        pts = rng.uniform(100, 200, (5, 2))
        np.testing.assert_allclose(pipe.inverse_transform(pipe.transform(pts)), pts, atol=1e-9)

    def test_out_of_range(self):
        est = RadialUndistorter(**self.KW).fit()
        with pytest.raises(OutOfRange):
            est.transform(np.array([[2000.0, 2000.0]]))

    def test_clone_unfitted(self):
        est = RadialUndistorter(**self.KW).fit()
        c = clone(est)
        assert not hasattr(c, "distortion_")
        assert c.get_params() == est.get_params()

    def test_single_point_is_one_row(self):
        est = RadialUndistorter(**self.KW).fit()
        out = est.transform([153.9882, 119.8105])
        assert out.shape == (1, 2)
        np.testing.assert_allclose(out[0], [153.9882, 119.8105], atol=1e-12)
