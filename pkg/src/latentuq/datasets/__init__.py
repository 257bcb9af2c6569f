from .images import ImageStack, channel_descriptors, load_ppm, rotate_image, synthetic_stack, write_ppm
from .population import PopulationParams, SyntheticPopulation, generate_population, read_population, write_population

__all__ = [
    "ImageStack",
    "PopulationParams",
    "SyntheticPopulation",
    "channel_descriptors",
    "generate_population",
    "load_ppm",
    "read_population",
    "rotate_image",
    "synthetic_stack",
    "write_population",
    "write_ppm",
]
