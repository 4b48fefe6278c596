"""Q&A instruction dataset construction: manifests, templates, levels, prompt files."""

from .builder import build_dataset, build_qa_pairs, export_prompts, import_prompts
from .levels import bucket_levels
from .manifest import load_manifest
from .templates import generate_templates
from .types import DatasetManifest, ManifestRecord, PromptTemplate, QAInstruction, QualityLabel

__all__ = [
    "DatasetManifest",
    "ManifestRecord",
    "PromptTemplate",
    "QAInstruction",
    "QualityLabel",
    "bucket_levels",
    "build_dataset",
    "build_qa_pairs",
    "export_prompts",
    "generate_templates",
    "import_prompts",
    "load_manifest",
]
