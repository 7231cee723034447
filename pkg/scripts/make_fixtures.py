"""Regenerate the shipped reference model files."""

from pathlib import Path

from govdisc.govmodel import FIXTURE_FILES, reference_build_model, reference_tool_model, save_model

OUT = Path(__file__).resolve().parents[1] / "src" / "govdisc" / "fixtures"


def main():
    for name, fname in FIXTURE_FILES.items():
        model = reference_build_model() if name == "build" else reference_tool_model(name)
        save_model(model, OUT / fname)
        print("wrote", OUT / fname)


if __name__ == "__main__":
    main()
