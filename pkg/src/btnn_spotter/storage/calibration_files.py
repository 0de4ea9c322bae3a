"""Calibration file format (.btc): a versioned YAML document."""

import logging
from pathlib import Path
from typing import Any, Dict, Union

import yaml

from ..errors import BtnnError, FormatError
from ..models.calibration import BoundaryTable, CalibrationSet, StateCalibration

logger = logging.getLogger(__name__)

FORMAT_NAME = "btnn-calibration"
VERSION = 1


def _table_to_dict(table: BoundaryTable) -> Dict[str, Any]:
    return {
        "boundaries": table.boundaries.tolist(),
        "probs": table.probs.tolist(),
        "counts": table.counts.tolist(),
    }


def save_calibration(calib: CalibrationSet, path: Union[str, Path]) -> None:
    document = {
        "format": FORMAT_NAME,
        "version": VERSION,
        "num_states": calib.num_states,
        "fusion": calib.fusion,
        "states": [
            {
                "state": state_id,
                "segments": entry.pos_table.num_segments,
                "scale_pos": float(entry.scale_pos),
                "scale_neg": float(entry.scale_neg),
                "positive": _table_to_dict(entry.pos_table),
                "negative": _table_to_dict(entry.neg_table),
            }
            for state_id, entry in calib.per_state.items()
        ],
    }
    with open(path, "w") as f:
        yaml.safe_dump(document, f, sort_keys=False, default_flow_style=None)
    logger.info(f"Saved calibration for {calib.num_states} states to {path}")


def load_calibration(path: Union[str, Path]) -> CalibrationSet:
    """
    Raises:
        FormatError: wrong format name or version, or inconsistent tables
    """
    with open(path, "r") as f:
        try:
            document = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise FormatError(f"{path}: unreadable calibration file: {e}") from e

    if not isinstance(document, dict) or document.get("format") != FORMAT_NAME:
        raise FormatError(f"{path}: not a calibration file")
    if document.get("version") != VERSION:
        raise FormatError(
            f"{path}: calibration version {document.get('version')} is not supported"
        )

    try:
        per_state = {}
        for entry in document["states"]:
            state_id = int(entry["state"])
            per_state[state_id] = StateCalibration(
                BoundaryTable(**entry["positive"]),
                BoundaryTable(**entry["negative"]),
                float(entry["scale_pos"]),
                float(entry["scale_neg"]),
            )
        calib = CalibrationSet(per_state, int(document["num_states"]), document.get("fusion", "complement"))
    except (KeyError, TypeError) as e:
        raise FormatError(f"{path}: malformed calibration entry: {e}") from e
    except BtnnError as e:
        raise FormatError(f"{path}: {e}") from e
    return calib
