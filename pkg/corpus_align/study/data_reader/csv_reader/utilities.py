"""
This file is part of corpus-align.

It defines a set of helper functions which are used by the other files.

Copyright 2026, corpus-align contributors
License: 3-Clause-BSD
"""


def list_datasets(manifest):
    """
    Return the names of the datasets of a manifest (in manifest order),
    and a dictionary that matches each name to its entry
    """
    names = [entry['name'] for entry in manifest['datasets']]
    name_to_entry = {entry['name']: entry for entry in manifest['datasets']}
    return names, name_to_entry
