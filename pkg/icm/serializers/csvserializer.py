import csv
from ..errors import FormatError
from .serializer import Serializer

class CSVSerializer(Serializer):
    """
    Plain comma separated tables with a header row. Lines always end
    in "\\n" so that output is byte-identical across platforms.
    """
    NAME = 'csv'
    EXTENSIONS = ('.csv',)

    @classmethod
    def can_serialize_table(cls):
        return True

    def serialize_table(self, header, rows):
        self._ensure_parent()
        with open(self.path, 'w', newline='', encoding='utf-8') as fp:
            writer = csv.writer(fp, lineterminator='\n')
            writer.writerow(header)
            for row in rows:
                if len(row) != len(header):
                    raise ValueError(f"row {row!r} does not match header {header!r}")
                writer.writerow(row)

    def deserialize_table(self):
        with open(self.path, newline='', encoding='utf-8') as fp:
            reader = csv.reader(fp)
            try:
                header = next(reader)
            except StopIteration:
                raise FormatError(f"{self.path}: empty CSV file")
            rows = [row for row in reader if row]
        for row in rows:
            if len(row) != len(header):
                raise FormatError(f"{self.path}: row {row!r} does not match header {header!r}")
        return header, rows
