"""Finite-difference verification of every differentiable block."""

import pytest

from moodpipe.gradcheck import BLOCKS, gradient_check


@pytest.mark.parametrize("block", BLOCKS)
def test_blocks_pass_at_ten_seeded_points(block):
    worst = max(gradient_check(block, seed) for seed in range(10))
    assert worst < 1e-4, f"{block}: max relative error {worst}"


def test_softmax_error_is_tiny():
    assert gradient_check("softmax", 0) < 1e-6


def test_attention_error_within_bound():
    assert gradient_check("attention", 0) < 1e-4


def test_unknown_block_rejected():
    with pytest.raises(ValueError):
        gradient_check("conv", 0)
