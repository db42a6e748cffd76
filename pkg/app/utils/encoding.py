"""Rendering of matrices, reports and trajectories for CLI artifacts.

Exact entries render as fraction strings ("3/8"), floats with repr. JSON
goes through `json.dumps(..., indent=2, sort_keys=True)` so that the same
config and seed give byte-identical output.
"""
import csv
import io
import json
from typing import Any, Dict, Iterable, List, Optional, Sequence

from app import __version__
from app.config import config
from app.models.matrices import BlockCountingMatrix, CoalescentTrajectory, GeneratorMatrix, TransitionMatrix
from app.models.reports import render_number


def artifact_metadata(run: Dict[str, Any], seed: Optional[int] = None, provenance: Optional[str] = None) -> Dict[str, Any]:
    """The header every artifact carries."""
    return {
        'tool': config.tool_name,
        'version': __version__,
        'config': {'file': config.path, 'settings': config.as_dict(), 'run': run},
        'seed': seed,
        'provenance': provenance,
    }


def dump_json(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def comment_header(data: Dict[str, Any]) -> str:
    """One `# {...}` line carrying artifact metadata above CSV rows."""
    return "# " + json.dumps(data, sort_keys=True, ensure_ascii=False) + "\n"


def _grid_csv(header: Sequence[str], labels: Sequence[str], grid: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([""] + list(header))
    for label, row in zip(labels, grid):
        writer.writerow([label] + [render_number(v) for v in row])
    return buffer.getvalue()


def matrix_to_csv(P: TransitionMatrix) -> str:
    """Square CSV with canonical partition encodings as header row and column."""
    labels = [pi.encode() for pi in P.states]
    return _grid_csv(labels, labels, P.entries)


def generator_to_csv(Q: GeneratorMatrix) -> str:
    labels = [pi.encode() for pi in Q.states]
    return _grid_csv(labels, labels, Q.rates)


def block_counting_to_csv(P: BlockCountingMatrix) -> str:
    labels = ['(' + ','.join(str(v) for v in i) + ')' for i in P.states]
    return _grid_csv(labels, labels, P.entries)


def matrix_to_json(P: TransitionMatrix) -> Dict[str, Any]:
    data = {
        'provenance': P.provenance,
        'states': [pi.encode() for pi in P.states],
        'entries': [[render_number(v) for v in row] for row in P.entries],
        'row_sums': [render_number(v) for v in P.row_sums()],
    }
    if P.stderr is not None:
        data['stderr'] = [[repr(float(v)) for v in row] for row in P.stderr]
        data['reps'] = P.reps
        data['seed'] = P.seed
    return data


def generator_to_json(Q: GeneratorMatrix) -> Dict[str, Any]:
    return {
        'states': [pi.encode() for pi in Q.states],
        'rates': [[repr(v) for v in row] for row in Q.rates],
        'row_sums': [repr(v) for v in Q.row_sums()],
    }


def block_counting_to_json(P: BlockCountingMatrix) -> Dict[str, Any]:
    return {
        'states': [list(i) for i in P.states],
        'entries': [[render_number(v) for v in row] for row in P.entries],
        'row_sums': [render_number(v) for v in P.row_sums()],
    }


def trajectory_lines(trajectory: CoalescentTrajectory, replicate: Optional[int] = None) -> List[str]:
    """JSON lines {"t": ..., "state": "..."} for one trajectory."""
    lines = []
    for t, state in trajectory.events:
        record: Dict[str, Any] = {'t': t, 'state': state.encode()}
        if replicate is not None:
            record['replicate'] = replicate
        lines.append(json.dumps(record, sort_keys=True))
    return lines
