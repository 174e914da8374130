import os
import shutil
import tempfile
import unittest

import numpy as np

from convex_dynamics import netpbm
from convex_dynamics.netpbm import NetpbmError


class TestNetpbm(unittest.TestCase):
    def setUp(self):
        self.test_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def test_decode_grayscale_with_comments(self):
        pixels = netpbm.decode(b'P5\n# scanned\n2 1\n255\n' + bytes([0, 255]))
        self.assertEqual(pixels.shape, (1, 2))
        self.assertEqual(pixels.dtype, np.uint8)
        self.assertEqual(pixels.tolist(), [[0, 255]])

    def test_decode_rescales_small_maxval(self):
        self.assertEqual(netpbm.decode(b'P5 2 1 15\n' + bytes([15, 0])).tolist(), [[255, 0]])

    def test_decode_rgb(self):
        pixels = netpbm.decode(b'P6\n1 2\n255\n' + bytes([1, 2, 3, 4, 5, 6]))
        self.assertEqual(pixels.shape, (2, 1, 3))
        self.assertEqual(pixels[1, 0].tolist(), [4, 5, 6])

    def test_decode_errors(self):
        with self.assertRaises(NetpbmError):
            netpbm.decode(b'P3\n1 1\n255\n0 0 0\n')

        with self.assertRaises(NetpbmError):
            netpbm.decode(b'P5\n2 2\n255\n' + bytes([0, 1, 2]))

        with self.assertRaises(NetpbmError):
            netpbm.decode(b'P5\n1 1\n65535\n' + bytes([0, 0]))

        with self.assertRaises(NetpbmError):
            netpbm.decode(b'P5\n0 1\n255\n')

        with self.assertRaises(NetpbmError):
            netpbm.decode(b'P5\n1 1\n255')

        with self.assertRaises(NetpbmError):
            netpbm.decode(b'P5\n1')

    def test_encode(self):
        self.assertEqual(netpbm.encode(np.array([[0, 255]], dtype=np.uint8)), b'P5\n2 1\n255\n' + bytes([0, 255]))
        self.assertTrue(netpbm.encode(np.zeros((1, 1, 3), dtype=np.uint8)).startswith(b'P6\n1 1\n255\n'))

        with self.assertRaises(NetpbmError):
            netpbm.encode(np.zeros((2, 2), dtype=float))

        with self.assertRaises(NetpbmError):
            netpbm.encode(np.zeros((2, 2, 2), dtype=np.uint8))

    def test_files(self):
        path = os.path.join(self.test_dir, 'image.ppm')
        pixels = np.arange(24, dtype=np.uint8).reshape(2, 4, 3)
        netpbm.write_image(path, pixels)
        self.assertEqual(netpbm.read_image(path).tolist(), pixels.tolist())

    def test_read_grayscale_file_with_small_maxval(self):
        path = os.path.join(self.test_dir, 'image.pgm')
        with open(path, 'wb') as image_file:
            image_file.write(b'P5\n# written by hand\n3 1\n15\n' + bytes([0, 15, 15]))

        self.assertEqual(netpbm.read_image(path).tolist(), [[0, 255, 255]])

    def test_read_unsupported_file(self):
        path = os.path.join(self.test_dir, 'image.pgm')
        with open(path, 'wb') as image_file:
            image_file.write(b'P2\n1 1\n255\n0\n')

        with self.assertRaises(NetpbmError):
            netpbm.read_image(path)
