"""
Export the scenario JSON schema and check the bundled scenarios against it.

Usage:
    uv run python scripts/export_config_schema.py

Output:
    docs/scenario.schema.json
"""

import json
from pathlib import Path

from feedback_cli.scenario import expand, load_scenario, read_document, scenario_schema

# =============================================================================
# CONFIGURATION
# =============================================================================

SCHEMA_PATH = Path("docs/scenario.schema.json")
SCENARIO_DIR = Path("scenarios")


def main():
    schema = scenario_schema()
    schema["$schema"] = "https://json-schema.org/draft/2020-12/schema"
    SCHEMA_PATH.parent.mkdir(parents=True, exist_ok=True)
    with open(SCHEMA_PATH, "w", encoding="utf-8") as f:
        json.dump(schema, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"Schema written to: {SCHEMA_PATH}")

    print("\nChecking scenarios...")
    for path in sorted(SCENARIO_DIR.glob("*.json")):
        config = load_scenario(path)
        fields = sorted(expand(read_document(path)))
        print(f"  {path.name}: {config.solver.value} ({', '.join(fields)})")


if __name__ == "__main__":
    main()
