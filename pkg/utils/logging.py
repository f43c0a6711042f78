"""
Logging utilities for SourceChecker.

Provides a run logger with file rotation and the file helpers every command
uses to write its artifacts.
"""

import csv
import hashlib
import json
import os
import sys
from datetime import datetime
from typing import Dict, Iterable, List, Optional, Sequence


class FileManager:
    """File operations utility class."""

    @staticmethod
    def ensure_directory_exists(directory: str):
        """Create directory if it doesn't exist."""
        if directory and not os.path.exists(directory):
            os.makedirs(directory)

    @staticmethod
    def write_csv(filepath: str, header: Sequence[str], rows: Iterable[Sequence[float]]):
        """Write a numeric CSV with full double precision."""
        FileManager.ensure_directory_exists(os.path.dirname(filepath))
        with open(filepath, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(header)
            for row in rows:
                writer.writerow([FileManager.format_value(value) for value in row])

    @staticmethod
    def read_csv(filepath: str) -> List[Dict[str, float]]:
        with open(filepath, 'r', encoding='utf-8', newline='') as f:
            return [{key: float(value) for key, value in row.items()} for row in csv.DictReader(f)]

    @staticmethod
    def format_value(value) -> str:
        if isinstance(value, str):
            return value
        return '%.17g' % float(value)

    @staticmethod
    def write_json(filepath: str, data: dict):
        FileManager.ensure_directory_exists(os.path.dirname(filepath))
        with open(filepath, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2, sort_keys=True)

    @staticmethod
    def read_json(filepath: str) -> dict:
        with open(filepath, 'r', encoding='utf-8') as f:
            return json.load(f)

    @staticmethod
    def sha256(filepath: str) -> str:
        digest = hashlib.sha256()
        with open(filepath, 'rb') as f:
            for chunk in iter(lambda: f.read(65536), b''):
                digest.update(chunk)
        return digest.hexdigest()

    @staticmethod
    def manifest(directory: str, exclude: Sequence[str] = ('logs',)) -> Dict[str, str]:
        """sha256 of every file under directory, keyed by relative path.

        Top-level entries named in `exclude` are skipped, and so is
        summary.json, which carries the manifest itself.
        """
        hashes = {}
        for root, dirs, files in os.walk(directory):
            if os.path.abspath(root) == os.path.abspath(directory):
                dirs[:] = [d for d in dirs if d not in exclude]
                files = [f for f in files if f != 'summary.json']
            for name in sorted(files):
                path = os.path.join(root, name)
                relative = os.path.relpath(path, directory).replace(os.sep, '/')
                hashes[relative] = FileManager.sha256(path)
        return dict(sorted(hashes.items()))

    @staticmethod
    def write_summary(directory: str, summary: dict) -> str:
        """Write summary.json: the flat summary plus a manifest of every other output file."""
        data = dict(summary)
        data['manifest'] = [
            {'path': path, 'sha256': digest} for path, digest in FileManager.manifest(directory).items()
        ]
        path = os.path.join(directory, 'summary.json')
        FileManager.write_json(path, data)
        return path


class RunLogger:
    """Logger for command runs: console echo plus rotating log files."""

    TAGS = ("normal", "success", "error")

    def __init__(self, stream=None, quiet: bool = False):
        self.stream = stream
        self.quiet = quiet
        self.entries: List[str] = []
        # File logging properties
        self.file_logging_enabled = False
        self.base_path: Optional[str] = None
        self.current_file_path: Optional[str] = None
        self.file_index = 0
        self.max_size_bytes = 500 * 1024  # 500KB limit

    def log(self, message: str, tag: str = "normal"):
        """Add log message."""
        if tag not in self.TAGS:
            tag = "normal"
        timestamp = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
        prefix = "" if tag == "normal" else f"{tag.upper()}: "
        log_entry = f"[{timestamp}] {prefix}{message}\n"
        self.entries.append(log_entry)
        if not self.quiet:
            out = self.stream or (sys.stderr if tag == "error" else sys.stdout)
            out.write(log_entry)
            out.flush()

        if self.file_logging_enabled:
            try:
                self._write_to_file(log_entry)
            except OSError:
                # a broken log file must not abort a run
                self.file_logging_enabled = False

    def enable_file_logging(self, base_path: str):
        """Enable continuous file logging with rotation.

        Args:
            base_path: Base path without extension like 'out/logs/run'
            Creates files: base_path_1.txt, base_path_2.txt ...
        """
        directory = os.path.dirname(base_path) or '.'
        FileManager.ensure_directory_exists(directory)
        self.base_path = base_path

        # Continue after the highest existing index
        prefix = os.path.basename(base_path)
        existing = []
        for fname in os.listdir(directory):
            if fname.startswith(prefix + '_') and fname.endswith('.txt'):
                try:
                    existing.append(int(fname[len(prefix) + 1:-4]))
                except ValueError:
                    pass

        self.file_index = max(existing) if existing else 0
        self._rotate_file()
        self.file_logging_enabled = True

    def _current_size(self) -> int:
        if self.current_file_path and os.path.exists(self.current_file_path):
            return os.path.getsize(self.current_file_path)
        return 0

    def _rotate_file(self):
        self.file_index += 1
        self.current_file_path = f"{self.base_path}_{self.file_index}.txt"
        header = (
            f"==== RUN LOG START ==== {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}\n"
            f"Maximum file size: {self.max_size_bytes} bytes\n"
            f"File: {os.path.basename(self.current_file_path)}\n"
            + "=" * 60 + "\n"
        )
        with open(self.current_file_path, 'w', encoding='utf-8') as f:
            f.write(header)

    def _write_to_file(self, log_entry: str):
        if not self.current_file_path or self._current_size() >= self.max_size_bytes:
            self._rotate_file()
        with open(self.current_file_path, 'a', encoding='utf-8') as f:
            f.write(log_entry)
