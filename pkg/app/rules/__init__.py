"""Combinatorial rules on labeled partitions and merge tensors."""
from .partitions import enumerate_partitions, count_partitions, merge_structure, restrict
from .tensors import coalescence_extension, increment, empty_tensor, tensor_leq

__all__ = [
    'enumerate_partitions',
    'count_partitions',
    'merge_structure',
    'restrict',
    'coalescence_extension',
    'increment',
    'empty_tensor',
    'tensor_leq'
]
