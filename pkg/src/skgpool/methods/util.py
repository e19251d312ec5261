import os
import json
import numpy as np
import pandas as pd
from .training import RunReport


def read_config_file(filename):
    """
    Parse key=value lines ('#' starts a comment). Keys are normalized to the
    underscore spelling of the long CLI flags, e.g. 'batch-size' -> 'batch_size'.
    """
    config = {}
    with open(filename, 'r', encoding='utf-8') as fh:
        for number, line in enumerate(fh, start=1):
            line = line.split('#', 1)[0].strip()
            if line == "":
                continue
            if '=' not in line:
                raise ValueError(os.path.basename(filename)+", line "+str(number)+": expected key=value")
            key, value = line.split('=', 1)
            config[key.strip().lstrip('-').replace('-', '_')] = value.strip()
    return config


def write_config_file(filename, params):
    with open(filename, 'w', encoding='utf-8') as fh:
        for key, value in params.items():
            if isinstance(value, (list, tuple)):
                value = ",".join(str(v) for v in value)
            fh.write(str(key)+"="+str(value)+"\n")


def parse_bool(value):
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ('true', '1', 'yes'):
        return True
    if text in ('false', '0', 'no'):
        return False
    raise ValueError("expected a boolean, got '"+str(value)+"'")


def parse_list(value, cast=str):
    if isinstance(value, (list, tuple)):
        return [cast(v) for v in value]
    return [cast(v.strip()) for v in str(value).split(',') if v.strip() != ""]


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, (np.ndarray, tuple, range)):
        return list(obj)
    raise TypeError("not JSON serializable: "+type(obj).__name__)


def dump_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def write_json(path, obj):
    with open(path, 'w', encoding='utf-8') as fh:
        fh.write(dump_json(obj))
    return path


def write_csv(path, df, index=False):
    df.to_csv(path, index=index, lineterminator="\n")
    return path


def write_text(path, text):
    with open(path, 'w', encoding='utf-8') as fh:
        fh.write(text)
    return path


def write_manifest(out_dir, command, config, seed, version):
    """manifest.json beside the outputs: everything needed to regenerate them."""
    return write_json(os.path.join(out_dir, 'manifest.json'),
                      {'command': command, 'config': config, 'seed': seed, 'version': version})


def read_reports(paths):
    reports = []
    for path in paths:
        with open(path, 'r', encoding='utf-8') as fh:
            reports.append(RunReport.from_json(fh.read()))
    return reports


def reports_frame(reports):
    return pd.concat([r.summary_frame() for r in reports], ignore_index=True)
