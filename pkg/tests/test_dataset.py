import struct
from collections import Counter

import numpy as np
import pytest
from pydantic import ValidationError

from src.dataset import (
    IMAGES_MAGIC,
    LABELS_MAGIC,
    MNIST_FILES,
    LabeledDataset,
    SplitMix64,
    SplitSpec,
    desk_scale_digits,
    downsample_to_8x8,
    load_mnist,
    parse_idx_images,
    parse_idx_labels,
    prng_next,
    shuffled_indices,
    split,
    write_idx_images,
    write_idx_labels,
)
from src.errors import (
    DatasetError,
    EmptySplit,
    LabelOutOfRange,
    MissingDatasetFile,
    TrailingData,
    TruncatedFile,
    WrongDimensions,
    WrongMagic,
)


def _dataset(n, d=3, seed=0):
    rng = np.random.default_rng(seed)
    return LabeledDataset(rng.random((n, d)), np.arange(n) % 10, 0)


# --- SplitMix64 ------------------------------------------------------------

def test_splitmix64_reference_outputs():
    assert SplitMix64(0).next_u64() == 0xE220A8397B1DCDAF
    assert SplitMix64(1).next_u64() == 0x910A2DEC89025CC1


def test_prng_next_matches_generator():
    out, state = prng_next(0)
    rng = SplitMix64(0)
    assert rng.next_u64() == out
    assert rng.state == state


def test_equal_seeds_give_equal_streams():
    a, b = SplitMix64(123), SplitMix64(123)
    assert [a.next_u64() for _ in range(1000)] == [b.next_u64() for _ in range(1000)]


def test_different_seeds_differ():
    assert SplitMix64(1).next_u64() != SplitMix64(2).next_u64()


def test_next_unit_in_half_open_interval():
    rng = SplitMix64(7)
    values = [rng.next_unit() for _ in range(1000)]
    assert min(values) >= 0.0
    assert max(values) < 1.0


def test_seed_must_fit_64_bits():
    with pytest.raises(ValueError):
        SplitMix64(-1)
    with pytest.raises(ValueError):
        SplitMix64(1 << 64)


def test_shuffled_indices_is_a_permutation():
    order = shuffled_indices(50, 3)
    assert sorted(order.tolist()) == list(range(50))
    assert order.tolist() != list(range(50))
    assert np.array_equal(order, shuffled_indices(50, 3))


# --- IDX -------------------------------------------------------------------

def test_parse_idx_images_layout():
    data = struct.pack(">4I", IMAGES_MAGIC, 2, 2, 2) + bytes(range(8))
    images = parse_idx_images(data)
    assert images.shape == (2, 2, 2)
    assert images.dtype == np.uint8
    assert images[0].tolist() == [[0, 1], [2, 3]]
    assert images[1].tolist() == [[4, 5], [6, 7]]


def test_parse_idx_images_rejects_label_magic():
    data = struct.pack(">4I", LABELS_MAGIC, 1, 1, 1) + b"\x00"
    with pytest.raises(WrongMagic):
        parse_idx_images(data)


def test_parse_idx_images_truncated():
    with pytest.raises(TruncatedFile):
        parse_idx_images(struct.pack(">4I", IMAGES_MAGIC, 2, 2, 2) + bytes(7))
    with pytest.raises(TruncatedFile):
        parse_idx_images(b"\x00\x00\x08")


def test_parse_idx_images_trailing_bytes():
    with pytest.raises(TrailingData):
        parse_idx_images(struct.pack(">4I", IMAGES_MAGIC, 1, 2, 2) + bytes(5))


def test_parse_idx_labels():
    data = struct.pack(">2I", LABELS_MAGIC, 3) + bytes([7, 2, 1])
    labels = parse_idx_labels(data)
    assert labels.tolist() == [7, 2, 1]


def test_parse_idx_labels_out_of_range():
    with pytest.raises(LabelOutOfRange):
        parse_idx_labels(struct.pack(">2I", LABELS_MAGIC, 2) + bytes([3, 10]))


def test_idx_round_trip():
    rng = np.random.default_rng(5)
    images = rng.integers(0, 256, size=(7, 5, 4), dtype=np.uint8)
    labels = rng.integers(0, 10, size=7)
    assert np.array_equal(parse_idx_images(write_idx_images(images)), images)
    assert np.array_equal(parse_idx_labels(write_idx_labels(labels)), labels)


def test_write_idx_images_needs_3d():
    with pytest.raises(WrongDimensions):
        write_idx_images(np.zeros((4, 4), dtype=np.uint8))


def test_load_mnist(mnist_dir):
    train = load_mnist(mnist_dir, "train")
    test = load_mnist(mnist_dir, "test")
    assert len(train) == 60
    assert len(test) == 20
    assert train.features.shape == (60, 784)
    assert train.image_side == 28
    assert train.images().shape == (60, 28, 28)


def test_load_mnist_missing_file(mnist_dir):
    (mnist_dir / MNIST_FILES["test"][1]).unlink()
    with pytest.raises(MissingDatasetFile):
        load_mnist(mnist_dir, "test")


def test_load_mnist_count_mismatch(mnist_dir):
    (mnist_dir / MNIST_FILES["train"][1]).write_bytes(write_idx_labels([1, 2, 3]))
    with pytest.raises(DatasetError):
        load_mnist(mnist_dir, "train")


def test_load_mnist_unknown_part(mnist_dir):
    with pytest.raises(DatasetError):
        load_mnist(mnist_dir, "validation")


# --- LabeledDataset --------------------------------------------------------

def test_dataset_rejects_mismatched_rows():
    with pytest.raises(WrongDimensions):
        LabeledDataset(np.zeros((3, 2)), np.zeros(4, dtype=np.int64), 0)


def test_dataset_rejects_non_digit_labels():
    with pytest.raises(LabelOutOfRange):
        LabeledDataset(np.zeros((2, 2)), np.array([0, 11]), 0)


def test_dataset_is_read_only():
    data = _dataset(5)
    with pytest.raises(ValueError):
        data.features[0, 0] = 1.0


def test_subset_copies_rows():
    data = _dataset(10)
    sub = data.subset([4, 1])
    assert np.array_equal(sub.features, data.features[[4, 1]])
    assert sub.labels.tolist() == [4, 1]


# --- split -----------------------------------------------------------------

def test_split_sizes_1797():
    train, val, test = split(_dataset(1797), SplitSpec())
    assert len(test) == 450
    assert len(val) == 135
    assert len(train) == 1212


def test_split_sizes_100():
    train, val, test = split(_dataset(100), SplitSpec(test_fraction=0.25, val_fraction=0.10))
    assert (len(train), len(val), len(test)) == (67, 8, 25)


def test_split_counts_use_the_float_product():
    # 100 * 0.07 == 7.000000000000001 -> 8 test; ceil(92 * 0.1) -> 10 validation
    train, val, test = split(_dataset(100), SplitSpec(test_fraction=0.07, val_fraction=0.10))
    assert (len(train), len(val), len(test)) == (82, 10, 8)


def test_split_is_a_partition():
    data = LabeledDataset(np.arange(200, dtype=np.float64)[:, None], np.arange(200) % 10, 0)
    parts = split(data, SplitSpec(seed=9))
    ids = [set(p.features[:, 0].astype(int).tolist()) for p in parts]
    assert set().union(*ids) == set(range(200))
    assert sum(len(s) for s in ids) == 200


def test_split_preserves_label_histogram():
    data = _dataset(123)
    parts = split(data, SplitSpec())
    combined = Counter()
    for p in parts:
        combined.update(p.labels.tolist())
    assert combined == Counter(data.labels.tolist())


def test_split_is_deterministic():
    data = _dataset(80)
    a = split(data, SplitSpec(seed=11))
    b = split(data, SplitSpec(seed=11))
    for pa, pb in zip(a, b):
        assert pa.features.tobytes() == pb.features.tobytes()
        assert pa.labels.tobytes() == pb.labels.tobytes()


def test_split_seed_changes_partition():
    data = LabeledDataset(np.arange(80, dtype=np.float64)[:, None], np.arange(80) % 10, 0)
    a = split(data, SplitSpec(seed=1))[2]
    b = split(data, SplitSpec(seed=2))[2]
    assert a.features.tolist() != b.features.tolist()


def test_split_too_small():
    with pytest.raises(EmptySplit):
        split(_dataset(3), SplitSpec())


@pytest.mark.parametrize("kwargs", [
    {"test_fraction": 0.0},
    {"test_fraction": 1.0},
    {"val_fraction": -0.1},
    {"val_fraction": 1.0},
])
def test_split_spec_validation(kwargs):
    with pytest.raises(ValidationError):
        SplitSpec(**kwargs)


# --- 8x8 downsampling --------------------------------------------------------

def test_downsample_zero_and_full():
    assert downsample_to_8x8(np.zeros((28, 28), dtype=np.uint8)).tolist() == [[0] * 8] * 8
    assert downsample_to_8x8(np.full((28, 28), 255, dtype=np.uint8)).tolist() == [[16] * 8] * 8


def _area_oracle(img):
    scale = 28 / 8
    out = np.zeros((8, 8))
    for oy in range(8):
        for ox in range(8):
            total = 0.0
            for y in range(28):
                fy = max(0.0, min((oy + 1) * scale, y + 1) - max(oy * scale, y))
                if fy == 0.0:
                    continue
                for x in range(28):
                    fx = max(0.0, min((ox + 1) * scale, x + 1) - max(ox * scale, x))
                    total += fy * fx * float(img[y, x])
            out[oy, ox] = total / (scale * scale)
    small = np.clip(np.floor(out + 0.5 + 1e-9), 0, 255)
    return np.minimum(np.floor(small * 16.0 / 255.0 + 0.5 + 1e-9), 16)


def test_downsample_matches_area_oracle():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(28, 28), dtype=np.uint8)
    got = downsample_to_8x8(img).astype(int)
    # both paths round twice; only exact .5 ties may land differently
    assert np.abs(got - _area_oracle(img)).max() <= 1
    assert np.mean(got == _area_oracle(img)) > 0.95


def test_downsample_needs_28x28():
    with pytest.raises(WrongDimensions):
        downsample_to_8x8(np.zeros((8, 8), dtype=np.uint8))


def test_desk_scale_digits(mnist_dir):
    small = desk_scale_digits(load_mnist(mnist_dir, "train"))
    assert small.features.shape == (60, 64)
    assert small.image_side == 8
    assert small.features.min() >= 0
    assert small.features.max() <= 16
