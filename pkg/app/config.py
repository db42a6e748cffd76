"""Configuration management for the Cannings genealogy toolkit."""
import os
import yaml
from pathlib import Path
from typing import Dict, Any, Optional

class Config:
    """Toolkit configuration loaded from config.yaml"""

    def __init__(self, config_path: Optional[str] = None):
        if config_path is None:
            config_path = os.environ.get('CANNINGS_CONFIG')
        if config_path is None:
            # Default to config.yaml in project root
            config_path = Path(__file__).parent.parent / "config.yaml"

        self.path = str(config_path)
        with open(config_path, 'r') as f:
            self._config: Dict[str, Any] = yaml.safe_load(f)

    def as_dict(self) -> Dict[str, Any]:
        """Plain copy of the loaded settings, echoed into CLI artifacts"""
        return yaml.safe_load(yaml.safe_dump(self._config))

    @property
    def max_sample_size(self) -> int:
        return self._config['enumeration']['max_sample_size']

    @property
    def max_types(self) -> int:
        return self._config['enumeration']['max_types']

    @property
    def default_reps(self) -> int:
        return self._config['monte_carlo']['default_reps']

    @property
    def mc_chunk_size(self) -> int:
        return self._config['monte_carlo']['chunk_size']

    @property
    def moment_reps(self) -> int:
        """Replicates used when a Custom law has no moment oracle"""
        return self._config['monte_carlo']['moment_reps']

    @property
    def sigma_threshold(self) -> float:
        return self._config['monte_carlo']['sigma_threshold']

    @property
    def min_agreement(self) -> float:
        return self._config['monte_carlo']['min_agreement']

    @property
    def random_tensors_per_depth(self) -> int:
        return self._config['law_checks']['random_tensors_per_depth']

    @property
    def random_tensor_seed(self) -> int:
        return self._config['law_checks']['random_tensor_seed']

    @property
    def trend_shrink_factor(self) -> float:
        return self._config['law_checks']['trend_shrink_factor']

    @property
    def rate_tolerance(self) -> float:
        return self._config['tolerances']['rate_identity']

    @property
    def row_sum_tolerance(self) -> float:
        return self._config['tolerances']['row_sum']

    @property
    def rho_tolerance(self) -> float:
        return self._config['tolerances']['rho_column_sum']

    @property
    def tool_name(self) -> str:
        return self._config['output']['tool_name']

    @property
    def output_format(self) -> str:
        return self._config['output']['format']

    @property
    def log_level(self) -> str:
        return self._config['logging']['level']

    @property
    def log_format(self) -> str:
        return self._config['logging']['format']

# Global config instance
config = Config()
