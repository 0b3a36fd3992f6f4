from .config import ScenarioConfig, load_scenario, parse_scenario, build_scenario
from .manifest import RunManifest
from .models import load_bpnn, load_gan, save_bpnn, save_gan
