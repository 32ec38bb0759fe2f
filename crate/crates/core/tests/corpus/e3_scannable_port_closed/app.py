import pymysql

conn = pymysql.connect(host="120.77.222.217", user="svc", password="Hx5Nw2KqRz", database="notes_app")
cur = conn.cursor()
cur.execute("SELECT title, body FROM notes WHERE author_id = %s", (7,))
