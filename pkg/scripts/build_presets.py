"""
Regenerate the bundled delay-to-power model documents from the preset parameters.

Run from the repository root: python scripts/build_presets.py

"""

from U2VChannel.formats.models import save_bpnn, bundled_model
from U2VChannel.geometry.paths import PathKind
from U2VChannel.learning.bpnn import preset_network

PRESETS: dict = {
    PathKind.LOS: "bpnn_los_preset",
    PathKind.NLOS: "bpnn_nlos_preset"
}

if __name__ == '__main__':

    for kind, name in PRESETS.items():
        save_bpnn(preset_network(kind), bundled_model(name), name=name)
        print(f"Wrote {bundled_model(name)}")
