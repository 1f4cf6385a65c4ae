# src/utils/run_manifest.py
"""
Deterministic run manifests written next to every command's outputs.

The config hash is computed over canonical (sorted-key) JSON, so identical
configs always hash identically regardless of key order in the input file.
"""

import hashlib
import json
import logging
import os
import platform
import time
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

PACKAGE_VERSION = '0.1.0'


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(',', ':'), default=str)


def config_hash(config_dict):
    return hashlib.sha256(canonical_json(config_dict).encode('utf-8')).hexdigest()


def file_digest(path, chunk_size=1 << 20):
    sha = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(chunk_size), b''):
            sha.update(chunk)
    return sha.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int = None
    input_digests: dict = field(default_factory=dict)
    output_paths: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    _started: float = field(default_factory=time.perf_counter, repr=False)

    @property
    def config_hash(self):
        return config_hash(self.config)

    @staticmethod
    def versions():
        return {
            'python': platform.python_version(),
            'numpy': np.__version__,
            'statewise': PACKAGE_VERSION,
        }

    def add_input(self, name, path):
        self.input_digests[name] = {'path': str(path), 'sha256': file_digest(path)}

    def add_output(self, name, path):
        self.output_paths[name] = str(path)

    def mark(self, label):
        """Records the elapsed wall-clock seconds since the manifest was created."""
        self.timings[label] = round(time.perf_counter() - self._started, 6)

    def to_dict(self):
        return {
            'command': self.command,
            'config_hash': self.config_hash,
            'config': self.config,
            'seed': self.seed,
            'versions': self.versions(),
            'input_digests': self.input_digests,
            'output_paths': self.output_paths,
            'timings': self.timings,
        }

    def write(self, path):
        self.mark('total')
        out_dir = os.path.dirname(str(path))
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True, default=str)
            f.write('\n')
        logger.info(f"Run manifest written to {path} (config hash {self.config_hash[:12]})")
        return path
