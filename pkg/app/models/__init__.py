"""Domain value types and file schemas."""
from .partition import LabeledPartition
from .tensor import MergeTensor
from .population import CanningsModel, CustomLaw, MutationLaw, WrightFisherLaw
from .matrices import BlockCountingMatrix, GeneratorMatrix, TransitionMatrix
from .rates import QMeasure, RateTable, XiAtom, XiSpec
from .reports import LawReport, PpfTable

__all__ = [
    'LabeledPartition',
    'MergeTensor',
    'CanningsModel',
    'CustomLaw',
    'MutationLaw',
    'WrightFisherLaw',
    'BlockCountingMatrix',
    'GeneratorMatrix',
    'TransitionMatrix',
    'QMeasure',
    'RateTable',
    'XiAtom',
    'XiSpec',
    'LawReport',
    'PpfTable'
]
