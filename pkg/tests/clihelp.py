"""Shared helpers for driving the CLI on synthetic datasets."""
import yaml

from patternaug.cli import main


def write_config(path, data_root, output, **blocks):
    cfg = {"dataset_root": str(data_root), "split_file": str(data_root / "train.txt"),
           "output_dir": str(output), "classes": ["Car"],
           "database": {"path": str(data_root.parent / "db")}}
    for key, val in blocks.items():
        cfg[key] = val
    path.write_text(yaml.safe_dump(cfg))
    return path


def run(*argv):
    return main([str(a) for a in argv])
