"""Noise-augmented image-size proposals."""

import pytest

from detgeom import IMAGE_BOX, Box, ProposalConfig, augment_box, draw_noise, generate_proposals


class TestAugmentBox:
    def test_zero_noise_is_identity(self):
        b = Box(0.5, 0.5, 1.0, 1.0)
        assert augment_box(b, 0.0, 0.0) == b

    def test_worked_example(self):
        out = augment_box(IMAGE_BOX, 0.1, -0.05)
        assert out == Box(0.6, 0.45, 0.8, 0.9)

    def test_edge_pins_at_image_border(self):
        # A pure x-shift: the right edge stays at 1, the left edge moves in.
        out = augment_box(IMAGE_BOX, 0.2, 0.0)
        x1, y1, x2, y2 = out.corners()
        assert (x1, y1, x2, y2) == pytest.approx((0.4, 0.0, 1.0, 1.0), abs=1e-12)

    def test_oversized_noise_is_clamped(self):
        out = augment_box(IMAGE_BOX, 5.0, -7.0)
        assert out.w > 0.0 and out.h > 0.0
        x1, y1, x2, y2 = out.corners()
        assert x1 >= -1e-12 and y1 >= -1e-12 and x2 <= 1.0 + 1e-12 and y2 <= 1.0 + 1e-12


class TestConfig:
    def test_defaults(self):
        cfg = ProposalConfig()
        assert (cfg.num_proposals, cfg.mu, cfg.sigma2) == (300, 0.0, 0.01)

    def test_validation(self):
        with pytest.raises(ValueError):
            ProposalConfig(num_proposals=0)
        with pytest.raises(ValueError):
            ProposalConfig(sigma2=-0.01)


class TestGenerateProposals:
    def test_zero_variance_gives_image_boxes(self):
        boxes = generate_proposals(ProposalConfig(num_proposals=50, sigma2=0.0, seed=3))
        assert all(b == IMAGE_BOX for b in boxes)

    def test_determinism(self):
        cfg = ProposalConfig(num_proposals=500, seed=1234)
        first = generate_proposals(cfg)
        second = generate_proposals(cfg)
        assert first == second  # dataclass equality is exact float equality

    def test_different_seeds_differ(self):
        a = generate_proposals(ProposalConfig(num_proposals=10, seed=1))
        b = generate_proposals(ProposalConfig(num_proposals=10, seed=2))
        assert a != b

    def test_containment_in_unit_image(self):
        boxes = generate_proposals(ProposalConfig(num_proposals=10_000, seed=9))
        for b in boxes:
            x1, y1, x2, y2 = b.corners()
            assert x1 >= -1e-12 and y1 >= -1e-12
            assert x2 <= 1.0 + 1e-12 and y2 <= 1.0 + 1e-12

    def test_shrink_identity_exact(self):
        cfg = ProposalConfig(num_proposals=10_000, seed=9)
        eps = draw_noise(cfg)
        boxes = generate_proposals(cfg)
        for (ex, ey), b in zip(eps, boxes):
            assert b.w == 1.0 - 2.0 * abs(float(ex))
            assert b.h == 1.0 - 2.0 * abs(float(ey))
            assert b.cx == 0.5 + float(ex)
            assert b.cy == 0.5 + float(ey)

    def test_noise_statistics(self):
        eps = draw_noise(ProposalConfig(num_proposals=100_000, seed=0))
        assert abs(eps[:, 0].mean()) < 1e-3
        assert abs(eps[:, 1].mean()) < 1e-3
        assert eps[:, 0].var() == pytest.approx(0.01, rel=0.05)
        assert eps[:, 1].var() == pytest.approx(0.01, rel=0.05)

    def test_positive_extent_always(self):
        # huge variance exercises the clamp
        boxes = generate_proposals(ProposalConfig(num_proposals=2_000, sigma2=4.0, seed=5))
        assert all(b.w > 0.0 and b.h > 0.0 for b in boxes)
