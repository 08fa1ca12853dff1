"""Minimal differentiable computation: tensors, a tape, layers, Adam."""
from .tensor import Tape, Tensor
from .params import ParameterStore, adam_step, clip_grad_norm

__all__ = ["Tape", "Tensor", "ParameterStore", "adam_step", "clip_grad_norm"]
