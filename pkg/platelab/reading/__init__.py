"""
Character assembly, the confidence tripwire and recogniser ports.
"""

from platelab.reading.assembly import (AssembledText, assemble, filter_ignored, group_lines, strip_department_code,
                                       tripwire, vertical_overlap)
from platelab.reading.external import ExternalRecognizer
from platelab.reading.glyphs import CHARACTER_GLYPHS, IGNORED_GLYPHS, CharDetection, GlyphClass, RecognizerPort
from platelab.reading.template import TemplateRecognizer, TemplateSet, build_templates, ncc, normalize_mask
