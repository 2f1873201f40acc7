import csv
import json
import os
from typing import Iterable, Sequence


class PrettyPrint:
    BOLD = '\033[1m'
    END = '\033[0m'

    BLUE = '\033[94m'
    GREEN = '\033[92m'
    RED = '\033[91m'
    YELLOW = '\033[93m'

    @staticmethod
    def msg_blue(s):
        print('{}==>{} {}{}{}'.format(
            PrettyPrint.BLUE, PrettyPrint.END,
            PrettyPrint.BOLD, s, PrettyPrint.END))

    @staticmethod
    def print_green(s):
        print('{}{}{}'.format(PrettyPrint.GREEN, s, PrettyPrint.END))

    @staticmethod
    def print_yellow(s):
        print('{}{}{}'.format(PrettyPrint.YELLOW, s, PrettyPrint.END))

    @staticmethod
    def print_red(s):
        print('{}{}{}'.format(PrettyPrint.RED, s, PrettyPrint.END))


def append_to_file(filename: str, text_to_append: str, recreate: bool = False,
                   permission: int = 0o644):
    path = os.path.dirname(filename)
    if path and not os.path.isdir(path):
        os.makedirs(path)

    if recreate and os.path.exists(filename):
        os.remove(filename)

    with open(filename, 'a') as fp:
        fp.write(text_to_append)
    os.chmod(filename, permission)


def write_json(filename: str, data) -> str:
    """
    Writes `data` with sorted keys and fixed float formatting so that two
    runs with the same inputs produce byte-identical files.
    """
    text = json.dumps(data, sort_keys=True, indent=2, default=_jsonable)
    append_to_file(filename, text + '\n', recreate=True)
    return filename


def write_csv(filename: str, header: Sequence[str],
              rows: Iterable[Sequence]) -> str:
    path = os.path.dirname(filename)
    if path and not os.path.isdir(path):
        os.makedirs(path)
    with open(filename, 'w', newline='') as fp:
        writer = csv.writer(fp)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(value) for value in row])
    os.chmod(filename, 0o644)
    return filename


def get_template_content(filename: str) -> str:
    dir_path = os.path.dirname(os.path.realpath(__file__))
    tpl = os.path.join(dir_path, 'templates', filename)
    with open(tpl, 'r') as file_tpl:
        content = file_tpl.read()
    return content


def list_templates() -> list:
    dir_path = os.path.join(os.path.dirname(os.path.realpath(__file__)),
                            'templates')
    return sorted(name for name in os.listdir(dir_path)
                  if name.endswith('.json'))


def _format_cell(value):
    if isinstance(value, float):
        return repr(value)
    return value


def _jsonable(value):
    # numpy scalars and arrays
    if hasattr(value, 'tolist'):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError('{!r} is not JSON serializable'.format(value))
