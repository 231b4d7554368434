import torch

from encoder_service.model import (
    LABELS,
    BoundaryEncoder,
    EncoderBackend,
    ModelConfig,
    assign_windows,
    encode_windows,
    load_checkpoint,
    save_checkpoint,
)
from encoder_service.vocab import Vocab

TINY = ModelConfig(d_model=32, n_heads=2, n_layers=1, dim_feedforward=64, max_len=64)


def tiny_backend(seed=0):
    vocab = Vocab.build(["hello world. some text here, and more words now."])
    torch.manual_seed(seed)
    return EncoderBackend(BoundaryEncoder(len(vocab), TINY), vocab)


class TestEncoding:
    def test_boundary_count_is_segments_plus_one(self):
        vocab = Vocab.build(["a b c d"])
        for n in (1, 3, 7):
            encoded, ranges = encode_windows(vocab, ["a b."] * n, max_len=512)
            assert len(encoded) == 1
            _, boundaries = encoded[0]
            assert len(boundaries) == n + 1

    def test_windows_respect_budget(self):
        vocab = Vocab.build(["word"])
        encoded, ranges = encode_windows(vocab, ["word " * 20] * 15, max_len=64)
        assert len(ranges) > 1
        for ids, _ in encoded:
            assert len(ids) <= 64
        assert assign_windows(15, ranges)  # every segment assigned
        covered = set()
        for a, b in ranges:
            covered.update(range(a, b))
        assert covered == set(range(15))

    def test_oversized_single_segment_truncated(self):
        vocab = Vocab.build(["word"])
        encoded, _ = encode_windows(vocab, ["word " * 200], max_len=64)
        assert len(encoded[0][0]) <= 64


class TestModel:
    def test_zero_head_gives_uniform(self):
        backend = tiny_backend()
        with torch.no_grad():
            backend.model.head.weight.zero_()
            backend.model.head.bias.zero_()
        for dist in backend.classify_segments(["hello world. ", "some text."]):
            assert all(abs(p - 1 / 9) < 1e-9 for p in dist.values())

    def test_arity_preserved(self):
        backend = tiny_backend()
        dists = backend.classify_segments([f"segment {k}." for k in range(7)])
        assert len(dists) == 7

    def test_distributions_normalized(self):
        backend = tiny_backend()
        for dist in backend.classify_segments(["hello. ", "world, ", "more."]):
            assert abs(sum(dist.values()) - 1.0) <= 1e-5
            assert set(dist) == set(LABELS)

    def test_single_segment_uses_start_plus_end_boundaries(self):
        backend = tiny_backend()
        segments = ["hello world."]
        encoded, _ = encode_windows(backend.vocab, segments, TINY.max_len)
        ids, boundaries = encoded[0]
        token_ids = torch.tensor([ids])
        pad_mask = torch.zeros_like(token_ids, dtype=torch.bool)
        with torch.no_grad():
            hidden = backend.model(token_ids, pad_mask)
            expected = backend.model.head(hidden[0, boundaries[0]] + hidden[0, boundaries[1]])
            probs = torch.softmax(expected.double(), dim=-1)
        dist = backend.classify_segments(segments)[0]
        assert all(
            abs(dist[label] - float(p) / float(probs.sum())) < 1e-9
            for label, p in zip(LABELS, probs)
        )

    def test_checkpoint_round_trip(self, tmp_path):
        backend = tiny_backend()
        save_checkpoint(tmp_path / "ckpt", backend.model, backend.vocab)
        loaded = load_checkpoint(tmp_path / "ckpt")
        a = backend.classify_segments(["hello world. ", "some text."])
        b = loaded.classify_segments(["hello world. ", "some text."])
        assert a == b
