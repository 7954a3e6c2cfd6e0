"""Rendering of terms and theories into target proof-assistant syntax."""

from .emitter import (
    DeclEmitter, ManifestEntry, emit_corpus, emit_declaration, read_manifest,
)
from .printer import Namer, Printer, print_term, print_type
from .profile import TARGETS, TargetProfile, load_profile
from .reparse import ReferenceParser, redundant_parens, reparse

__all__ = [
    "DeclEmitter", "ManifestEntry", "Namer", "Printer", "ReferenceParser",
    "TARGETS", "TargetProfile", "emit_corpus", "emit_declaration", "load_profile",
    "print_term", "print_type", "read_manifest", "redundant_parens", "reparse",
]
