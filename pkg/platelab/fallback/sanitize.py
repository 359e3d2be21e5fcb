"""
Normalisation of free-form model answers to Bolivian plate syntax.
"""

import re

PLATE_PATTERN = re.compile(r"\d{3,4}[A-Z]{3}")
_NON_ALNUM = re.compile(r"[^0-9A-Z]")
COUNTRY_WORD = "BOLIVIA"


def _remove_country(text: str) -> str:
    while COUNTRY_WORD in text:
        text = text.replace(COUNTRY_WORD, "")
    return text


def sanitize(raw: str) -> str:
    """
    Extracts a plate string from a model answer.

    Upper-cases, deletes the BOLIVIA word and every character outside [0-9A-Z], then returns the first
    run of three or four digits followed by three letters. Without such a run, the stripped string is
    returned as-is.

    :param raw: (str) Model output.
    :return: (str) Sanitised text over [0-9A-Z].
    """

    text = _remove_country(raw.upper())
    text = _remove_country(_NON_ALNUM.sub("", text))

    match = PLATE_PATTERN.search(text)
    if match:
        return match.group(0)

    return text
