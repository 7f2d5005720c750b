import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from twinholo import imageio


class TestPBM:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        bits = (rng.random((33, 70)) < 0.3).astype(np.uint8)
        path = tmp_path / "a.pbm"
        imageio.write_pbm(path, bits)
        assert np.array_equal(imageio.read_pbm(path), bits)

    def test_deterministic_bytes(self, tmp_path):
        bits = np.eye(40, dtype=np.uint8)
        p1, p2 = tmp_path / "a.pbm", tmp_path / "b.pbm"
        imageio.write_pbm(p1, bits)
        imageio.write_pbm(p2, bits)
        assert p1.read_bytes() == p2.read_bytes()

    def test_rejects_non_2d(self, tmp_path):
        with pytest.raises(ValueError):
            imageio.write_pbm(tmp_path / "a.pbm", np.zeros(5))

    def test_rejects_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.pbm"
        path.write_bytes(b"P5\n2 2\n255\n1234")
        with pytest.raises(ValueError):
            imageio.read_pbm(path)

    def test_skips_comments(self, tmp_path):
        path = tmp_path / "c.pbm"
        bits = np.array([[1, 0, 1, 1, 0, 0, 1, 0]], dtype=np.uint8)
        path.write_bytes(b"P4\n# a comment\n8 1\n" + np.packbits(bits).tobytes())
        assert np.array_equal(imageio.read_pbm(path), bits)

    @settings(max_examples=20, deadline=None)
    @given(
        bits=arrays(
            np.uint8, st.tuples(st.integers(1, 40), st.integers(1, 40)), elements=st.integers(0, 1)
        )
    )
    def test_roundtrip_any_shape(self, bits, tmp_path_factory):
        path = tmp_path_factory.mktemp("pbm") / "x.pbm"
        imageio.write_pbm(path, bits)
        assert np.array_equal(imageio.read_pbm(path), bits)


class TestPGM16:
    def test_roundtrip_is_linear_rescale(self, tmp_path):
        rng = np.random.default_rng(1)
        img = rng.normal(size=(20, 30))
        path = tmp_path / "a.pgm"
        imageio.write_pgm16(path, img)
        back = imageio.read_pgm16(path)
        lo, hi = img.min(), img.max()
        expected = np.round((img - lo) / (hi - lo) * 65535.0)
        assert np.array_equal(back, expected)

    def test_constant_image(self, tmp_path):
        path = tmp_path / "c.pgm"
        imageio.write_pgm16(path, np.full((8, 8), 3.0))
        assert np.array_equal(imageio.read_pgm16(path), np.zeros((8, 8)))

    def test_reads_8bit(self, tmp_path):
        path = tmp_path / "b.pgm"
        pix = np.arange(6, dtype=np.uint8).reshape(2, 3)
        path.write_bytes(b"P5\n3 2\n255\n" + pix.tobytes())
        assert np.array_equal(imageio.read_pgm16(path), pix)

    def test_rejects_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P4\n2 2\n\x00")
        with pytest.raises(ValueError):
            imageio.read_pgm16(path)


class TestFloatPlanar:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(2)
        a = (rng.normal(size=(16, 24)) + 1j * rng.normal(size=(16, 24))).astype(np.complex64)
        path = tmp_path / "a.fpl"
        imageio.write_float_planar(path, a)
        back = imageio.read_float_planar(path)
        assert back.shape == (16, 24)
        assert np.allclose(back, a, atol=1e-7)

    def test_rejects_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.fpl"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(ValueError):
            imageio.read_float_planar(path)
