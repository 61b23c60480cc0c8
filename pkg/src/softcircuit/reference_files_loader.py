import importlib.resources
import json
from pathlib import Path
from typing import Union


class ReferenceFilesLoader:
    """
    A utility class for loading the packaged reference files. This is needed from a code
    performance standpoint to read the files once and then share the parsed content
    across the models and the acceptance runner.

    Attributes:
        data_directory (Path): The directory containing the reference files.
        material_reference (dict): Measured material constants keyed by name. Each entry has
                                   "value", "unit" and "note".
        damage_presets (dict): Percolation model presets keyed by ink name.
        ink_recipes (dict): Ink formulations keyed by ink name.
        run_config_schema (dict): JSON Schema of the run configuration file.

    Methods:
        _get_material_reference: Retrieve material constants from a JSON file.
        _get_damage_presets: Retrieve percolation presets from a JSON file.
        _get_ink_recipes: Retrieve ink formulations from a JSON file.
        _get_run_config_schema: Retrieve the run configuration schema from a JSON file.
    """

    def __init__(self, filepath: Union[Path, None] = None):
        if filepath is None:
            filepath = importlib.resources.files("softcircuit.reference_data")
        self.data_directory = filepath
        self.material_reference = self._get_material_reference()
        self.damage_presets = self._get_damage_presets()
        self.ink_recipes = self._get_ink_recipes()
        self.run_config_schema = self._get_run_config_schema()

    def _load_json(self, filename: str) -> dict:
        with (self.data_directory / filename).open("r", encoding="utf-8") as file:
            return json.load(file)

    def _get_material_reference(self) -> dict:
        """
        Retrieve the material reference constants from a JSON file.

        Returns:
            dict: A dictionary of constants. Every entry must carry a note describing
                  the measurement it came from.
        """
        reference = self._load_json("material_reference.json")
        for name, entry in reference.items():
            if not entry.get("note"):
                raise ValueError(f"Material reference {name} is missing its note")

        return reference

    def _get_damage_presets(self) -> dict:
        """
        Retrieve the percolation damage presets from a JSON file.

        Returns:
            dict: A dictionary mapping ink names to lattice, damage and grid settings.
        """
        return self._load_json("damage_presets.json")

    def _get_ink_recipes(self) -> dict:
        """
        Retrieve ink formulations from a JSON file.

        Returns:
            dict: A dictionary mapping ink names to component masses.
        """
        return self._load_json("ink_recipes.json")

    def _get_run_config_schema(self) -> dict:
        """
        Retrieve the JSON Schema that run configuration files are validated against.

        Returns:
            dict: A draft 2020-12 schema.
        """
        return self._load_json("run_config.schema.json")


_DEFAULT_LOADER: Union[ReferenceFilesLoader, None] = None


def default_reference_files() -> ReferenceFilesLoader:
    """
    Return the process-wide loader for the packaged reference data, created on first use.
    """
    global _DEFAULT_LOADER
    if _DEFAULT_LOADER is None:
        _DEFAULT_LOADER = ReferenceFilesLoader()
    return _DEFAULT_LOADER
