import csv
import copy
import json
import os
import logging

from helpers import ValidationError, format_row

logger = logging.getLogger(__name__)

PACKAGE_DIR = os.path.dirname(os.path.abspath(__file__))
DATA_DIR = os.path.join(PACKAGE_DIR, "data")

BUILTIN_PREFIX = "builtin:"


def deep_merge(base, override):
    """Merge nested mappings; values from override win"""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


class DataStore:
    """Packaged data files in, experiment artifacts out"""

    def __init__(self, out_dir=None, data_dir=DATA_DIR):
        self.data_dir = data_dir
        self.config_file = os.path.join(self.data_dir, "default_config.json")
        self.palette_file = os.path.join(self.data_dir, "table1_palette.csv")
        self.reflectance_file = os.path.join(self.data_dir, "table2_reflectance.csv")
        self.out_dir = out_dir

        if self.out_dir:
            os.makedirs(self.out_dir, exist_ok=True)

    def _read_json(self, file_path):
        """Read JSON data from file"""
        try:
            with open(file_path, 'r') as f:
                return json.load(f)
        except FileNotFoundError:
            logger.error(f"File not found: {file_path}")
            raise ValidationError(f"file not found: {file_path}")
        except json.JSONDecodeError as e:
            logger.error(f"Invalid JSON in {file_path}: {e}")
            raise ValidationError(f"invalid JSON in {file_path}: {e}") from e

    def _write_json(self, file_path, data):
        """Write JSON data to file"""
        with open(file_path, 'w') as f:
            json.dump(data, f, indent=2, sort_keys=False)
            f.write("\n")
        logger.info(f"Wrote {file_path}")
        return file_path

    def _read_csv(self, file_path):
        """Read CSV records keyed by header"""
        try:
            with open(file_path, 'r', newline='') as f:
                rows = list(csv.DictReader(f))
        except FileNotFoundError:
            logger.error(f"File not found: {file_path}")
            raise ValidationError(f"file not found: {file_path}")
        except csv.Error as e:
            logger.error(f"Invalid CSV in {file_path}: {e}")
            raise ValidationError(f"invalid CSV in {file_path}: {e}") from e
        if not rows:
            raise ValidationError(f"no records in {file_path}")
        return rows

    def output_path(self, name):
        if not self.out_dir:
            raise ValidationError("no output directory configured")
        return os.path.join(self.out_dir, name)

    # Configuration
    def load_config(self, user_config=None):
        """Packaged defaults, overlaid with a user JSON file"""
        config = self._read_json(self.config_file)
        if user_config:
            overlay = self._read_json(user_config)
            if not isinstance(overlay, dict):
                raise ValidationError(f"config {user_config} must hold a JSON object")
            config = deep_merge(config, overlay)
            logger.info(f"Loaded config overlay from {user_config}")
        return config

    # Input tables
    def read_palette_rows(self, source):
        """Palette records `index,lx_nm,ly_nm,phase_rad`"""
        path = self.palette_file if source == BUILTIN_PREFIX + "table1" else source
        return self._read_csv(path)

    def read_reflectance_rows(self, source):
        """Reflectance records with `theta_deg,rx` columns"""
        path = self.reflectance_file if source == BUILTIN_PREFIX + "table2" else source
        return self._read_csv(path)

    def read_green_record(self, file_path):
        """Green sample record, e.g. `{"basis": "cartesian", "im_gxx": 0.8, "im_gyy": 1.0}`"""
        record = self._read_json(file_path)
        if not isinstance(record, dict):
            raise ValidationError(f"{file_path} must hold a JSON object")
        return record

    def table2_reflectance_by_supercell(self):
        """Supercell index -> tabulated reflectance"""
        return {int(row['n']): float(row['rx']) for row in self._read_csv(self.reflectance_file)}

    # Artifacts
    def write_csv(self, name, header, rows):
        file_path = self.output_path(name)
        with open(file_path, 'w', newline='') as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow(format_row(row))
        logger.info(f"Wrote {len(rows)} rows to {file_path}")
        return file_path

    def write_json(self, name, data):
        return self._write_json(self.output_path(name), data)

    def write_report(self, name, text):
        file_path = self.output_path(name)
        with open(file_path, 'w') as f:
            f.write(text)
        logger.info(f"Wrote {file_path}")
        return file_path
