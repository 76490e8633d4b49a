"""Bundled structure files: the logarithmic rank-2 example, the trivial
rank-3 structure, and the rank-2 polynomial family at k = 4, 5, 7."""

from importlib import resources


def bundled_names() -> tuple[str, ...]:
    files = resources.files(__name__)
    return tuple(sorted(
        p.name[:-5] for p in files.iterdir() if p.name.endswith(".json")
    ))


def bundled_text(name: str) -> str:
    return resources.files(__name__).joinpath(f"{name}.json").read_text("utf-8")
